# %% [markdown]
# # Command-line workflow
#
# The `gslearn` command drives the same library from the shell. This script
# calls its entry point in-process and writes everything under a temporary
# directory. Each step prints the equivalent shell command.

# %%
import json
import shlex
import tempfile
from pathlib import Path

from gslearn.cli import main

work = Path(tempfile.mkdtemp(prefix="gslearn-demo-"))

def gslearn(*args):
    args = [str(a) for a in args]
    print("$ gslearn", shlex.join(args))
    code = main(args)
    print(f"(exit {code})\n")
    return code

# %%
data = work / "data" / "smooth.gsld"
gslearn("generate", "--graphs", "er", "--n", 15, "--p", 0.25, "--signals", "smooth",
        "--num-signals", 200, "--similarity", "distance", "--train", 20, "--val", 5,
        "--test", 5, "--seed", 1, "-o", data)
gslearn("inspect", data)

# %% [markdown]
# Pick hyperparameters on the validation split, then solve the test split with them.

# %%
# raw squared distances grow with the number of signals, so alpha has to be large.
# The default step 0.05 stays stable for beta up to about 7 at n = 15.
gslearn("gridsearch", "--dataset", data, "--method", "smooth", "--tau", 1.0,
        "--grid", "alpha=100,1000,10000", "--grid", "beta=0.1,1,3", "--metric", "auprc",
        "-o", work / "grid")
best = json.loads((work / "grid" / "best.json").read_text())["hyperparameters"]
flags = [x for k, v in best.items() for x in (f"--{k}", v)]
gslearn("solve", "--dataset", data, "--method", "smooth", "--tau", 1.0, *flags,
        "-o", work / "solve")
print((work / "solve" / "summary.csv").read_text().splitlines()[0])

# %% [markdown]
# Train an unrolled deconvolution network on diffused signals, evaluate it, and
# rerun training from the recorded config.

# %%
diff = work / "data" / "diffuse.gsld"
gslearn("generate", "--graphs", "er", "--n", 15, "--p", 0.25, "--signals", "diffuse",
        "--num-signals", 100, "--noise-sigma", 0.05, "--train", 40, "--val", 10, "--test", 10,
        "--seed", 2, "-o", diff)
gslearn("train", "--dataset", diff, "--method", "gdn", "--depth", 6, "--epochs", 30,
        "--lr", 0.02, "--batch-size", 10, "--dump-intermediates", 55, "-o", work / "train")
gslearn("eval", "--dataset", diff, "--model", work / "train" / "model.json", "-o", work / "eval")
print(sorted(p.name for p in (work / "train" / "intermediates").iterdir())[:4], "...")
cfg = json.loads((work / "train" / "run_config.json").read_text())
cfg["out"] = str(work / "train2")
(work / "rerun.json").write_text(json.dumps(cfg))
gslearn("train", "--config", work / "rerun.json")
same = (work / "train" / "model.json").read_bytes() == (work / "train2" / "model.json").read_bytes()
print("rerun reproduced the checkpoint:", same)
