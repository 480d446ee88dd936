"""TF-IDF n-gram baselines, chi-squared selection and the metric suite.

Run: python3 demos/04_baselines_and_metrics.py
"""
import numpy as np

from crisiscnn.baselines import predict_linear_batch, train_linear_svm, train_logreg
from crisiscnn.corpus import CRISIS_SCHEMA, LabeledExample, merge_to_binary, stratified_split
from crisiscnn.evaluation import evaluate, pr_curve, roc_auc
from crisiscnn.features import fit_featurizer
from crisiscnn.numerics import softmax
from crisiscnn.synth import generate_tweets
from crisiscnn.textprep import preprocess

rows = generate_tweets(1500, seed=5, noise_rate=0.6)
examples = [LabeledExample(tid, tuple(preprocess(t)), CRISIS_SCHEMA.index(lab)) for tid, t, lab in rows]
split = stratified_split(examples, seed=1)
docs = [ex.tokens for ex in split.train]
labels = [ex.label for ex in split.train]

full = fit_featurizer(docs)
picked = fit_featurizer(docs, labels, chi2_k=300)
print(f"n-gram vocabulary {full.dim} columns; chi-squared keeps {picked.dim}")

X_test = [ex.tokens for ex in split.test]
y_test = np.array([ex.label for ex in split.test])
lr = train_logreg(full.sparse_batch(docs), labels, CRISIS_SCHEMA.K, epochs=20)
svm = train_linear_svm(picked.sparse_batch(docs), labels, CRISIS_SCHEMA.K, epochs=20)
for name, model, feat in (("logreg", lr, full), ("svm+chi2", svm, picked)):
    _, scores = predict_linear_batch(model, feat.sparse_batch(X_test))
    probs = scores if name == "logreg" else softmax(scores, axis=1)
    rep = evaluate(y_test, probs, CRISIS_SCHEMA)
    print(f"{name:9s} accuracy {rep.accuracy:.3f}  macro-F1 {rep.macro_f1:.3f}")

# Binary view: informative (class 0) against everything else.
merged, bschema = merge_to_binary(split.test, CRISIS_SCHEMA)
_, scores = predict_linear_batch(lr, full.sparse_batch(X_test))
p_inf = 1.0 - scores[:, CRISIS_SCHEMA.index("Not related or irrelevant")]
gold_inf = np.array([ex.label == 0 for ex in merged])
points, ap = pr_curve(p_inf, gold_inf)
print(f"\nbinary AUC {roc_auc(p_inf, gold_inf):.3f}  average precision {ap:.3f}  "
      f"({len(points)} PR points)")
