"""Drive the command line end to end in a temporary directory.

synth writes maps and ground truth, track writes lane files (pausing halfway
through to save and reload the tracker state), eval scores them and bench times
each stage.
"""

import os
import shutil
import tempfile

from lanetrack.cli import main
from lanetrack.synth import lane_change_scenario, save_scenario

work = tempfile.mkdtemp(prefix="lanetrack-demo-")
scenario = os.path.join(work, "scenario.yaml")
save_scenario(lane_change_scenario(noise=0.05), scenario)

data = os.path.join(work, "data")
main(["synth", "--scenario", scenario, "--output", data])
print("wrote", len(os.listdir(data)), "files to", data)

# split the frames in two to show checkpointing
first, second = os.path.join(work, "first"), os.path.join(work, "second")
os.makedirs(first)
os.makedirs(second)
for name in sorted(os.listdir(data)):
    if name.endswith(".lpm"):
        shutil.copy(os.path.join(data, name), first if int(name[:5]) < 10 else second)

pred = os.path.join(work, "pred")
state = os.path.join(work, "state.json")
main(["track", "--input", first, "--output", pred, "--save-state", state])
main(["track", "--input", second, "--output", pred, "--load-state", state])

print("accuracy:")
main(["eval", "--gt", data, "--pred", pred, "--thresholds", "0.3,0.5"])

print("per-stage timing:")
main(["bench", "--input", data, "--reps", "3"])

shutil.rmtree(work)
