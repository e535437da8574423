"""Kill the loop at a shrink point, restore the checkpoint, get the same
answer.

A checkpoint (iteration number, quantum flag, best-so-far) is written before
every reconfiguration. Because each iteration derives its own seeds from the
master seed, resuming from the checkpoint reproduces the uninterrupted run's
solution bit for bit.
"""

import numpy as np

from hqsched import MalleableRuntime, ResourceProvider, acquire_lease, run_pipeline
from hqsched.config import default_pipeline_config
from hqsched.dataset import generate_blobs
from hqsched.pipeline import ParamSchedule, read_checkpoint

ds = generate_blobs(1500, 4, 0.65, (-10, -10, 10, 10), seed=1)
cfg = default_pipeline_config(silhouette_threshold=2.0, max_iterations=3,
                              schedule=ParamSchedule(base_k=1, dbscan_eps=5.56))


def driver(checkpoint_dir=None):
    provider = ResourceProvider(3)
    lease = acquire_lease(provider, 3)
    return lease, MalleableRuntime(provider, lease, checkpoint_dir=checkpoint_dir,
                                   expand_timeout=0.1)


lease, rt = driver()
uninterrupted = run_pipeline(ds, cfg, lease, rt)
print(f"uninterrupted run: score {uninterrupted.score:.6f}, "
      f"bits {uninterrupted.best_x.tolist()}")

# crash right after the shrink of iteration 1 - the checkpoint survives
lease, rt = driver(checkpoint_dir="ckpt_out")
out = run_pipeline(ds, cfg, lease, rt, abort_at_minimize=1)
assert out is None
print("simulated crash after iteration 1's shrink; checkpoint written")

saved = read_checkpoint("ckpt_out/checkpoint.json")
print(f"checkpoint: iteration={saved.iteration}, quantum={saved.quantum_flag}, "
      f"best so far {saved.best_score:.6f}")

lease, rt = driver()
resumed = run_pipeline(ds, cfg, lease, rt, resume_from=saved)
print(f"resumed run:       score {resumed.score:.6f}, "
      f"bits {resumed.best_x.tolist()}")
assert resumed.score == uninterrupted.score
assert np.array_equal(resumed.best_x, uninterrupted.best_x)
print("identical to the uninterrupted run, bit for bit.")
