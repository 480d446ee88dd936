"""Compare event-only training with the two adaptation strategies.

The out-of-event pool comes from a shifted domain: half of its class
keywords are drawn from a vocabulary the event data never uses.

Run: python3 demos/03_domain_adaptation.py
"""
from crisiscnn import pipelines as pl
from crisiscnn.config import RunConfig
from crisiscnn.corpus import CRISIS_SCHEMA, DatasetSplit, LabeledExample, stratified_split
from crisiscnn.synth import generate_tweets
from crisiscnn.textprep import preprocess


def load(rows):
    return [LabeledExample(tid, tuple(preprocess(t)), CRISIS_SCHEMA.index(lab)) for tid, t, lab in rows]


event = pl.PreparedData(CRISIS_SCHEMA, stratified_split(
    load(generate_tweets(300, seed=3, noise_rate=0.5)), seed=0))
pool = load(generate_tweets(1500, seed=4, domain=1, shift=0.5, noise_rate=0.5))
out = pl.PreparedData(CRISIS_SCHEMA, DatasetSplit(pool, [], []))

cfg = RunConfig(t_max=20, embed_dim=32, num_filters=16, hidden=32, max_epochs=8, patience=3)
event_run = pl.run_mode(cfg, "event", event)
for mode in pl.MODES:
    run = event_run if mode == "event" else pl.run_mode(cfg, mode, event, out, event_run.model)
    rep = pl.evaluate_model(run.model, event.split.test)
    print(f"{mode:13s} train size {len(run.train_examples):5d}  "
          f"test acc {rep.accuracy:.3f}  macro-F1 {rep.macro_f1:.3f}")

kept = pl.select_out_of_event(event_run.model, pl.as_out_of_event(pool))
print(f"\ninstance selection kept {len(kept)} of {len(pool)} out-of-event tweets")
