"""Walk through tweet normalisation, tokenisation and vocabulary building.

Run: python3 demos/01_preprocessing.py
"""
from crisiscnn.corpus import LabeledExample, build_vocab
from crisiscnn.embeddings import encode
from crisiscnn.synth import generate_tweets
from crisiscnn.textprep import normalize, preprocess

samples = [
    "Sooooo sad!!! 4 Nepal :( http://t.co/ab @UN",
    "RT @CNN: Quake hits 7.8, thousands need HELP",
    "#NepalEarthquake donate now www.redcross.org",
]

print("normalisation")
for s in samples:
    print(f"  {s!r}\n    -> {normalize(s)!r}\n    -> {preprocess(s)}")

# Normalising twice changes nothing.
assert all(normalize(normalize(s)) == normalize(s) for s in samples)

print("\nsynthetic tweets")
rows = generate_tweets(8, seed=1)
for tid, text, label in rows[:4]:
    print(f"  {tid}  [{label}]  {text}")

examples = [LabeledExample(tid, tuple(preprocess(t)), 0) for tid, t, _ in rows]
vocab = build_vocab(examples, P=90)
print(f"\nvocabulary: {len(vocab)} entries, first ten {vocab.itos[:10]}")
print("encoded first tweet:", encode(examples[0].tokens, vocab, 12).tolist())
