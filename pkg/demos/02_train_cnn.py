"""Train the tweet CNN on synthetic data and report test metrics.

A reduced network keeps the run to a few seconds; the CLI defaults use the
full 300-dimensional, 100-filter configuration.

Run: python3 demos/02_train_cnn.py
"""
from crisiscnn.cnn import encode_examples, init_params
from crisiscnn.config import RunConfig
from crisiscnn.corpus import CRISIS_SCHEMA, LabeledExample, build_vocab, stratified_split
from crisiscnn.embeddings import random_init
from crisiscnn.evaluation import evaluate
from crisiscnn.synth import generate_tweets
from crisiscnn.textprep import preprocess
from crisiscnn.train import predict_probs, train

rows = generate_tweets(1200, seed=2)
examples = [LabeledExample(tid, tuple(preprocess(t)), CRISIS_SCHEMA.index(lab)) for tid, t, lab in rows]
split = stratified_split(examples, seed=0)
vocab = build_vocab(split.train)

cfg = RunConfig(t_max=20, embed_dim=50, num_filters=32, hidden=50, max_epochs=10)
net = cfg.cnn_config(CRISIS_SCHEMA.K)
params = init_params(net, random_init(vocab, net.embed_dim, seed=cfg.seed), seed=cfg.seed)

result = train(params, cfg.train_config(),
               encode_examples(split.train, vocab, net.t_max),
               encode_examples(split.validation, vocab, net.t_max))
for r in result.history:
    print(f"epoch {r.epoch:2d}  loss {r.train_loss:.4f}  dev acc {r.val_accuracy:.3f}")
print(f"best epoch {result.best_epoch}")

test = encode_examples(split.test, vocab, net.t_max)
report = evaluate(test.labels, predict_probs(result.params, test), CRISIS_SCHEMA)
print(f"test accuracy {report.accuracy:.3f}  macro-F1 {report.macro_f1:.3f}")
print(report.confusion)
