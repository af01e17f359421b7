#!/usr/bin/env python3
# Copyright 2026 The vshp-mpc Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Recompute the run summary from a trace CSV (stdlib only).

Usage: summarize_trace.py TRACE.csv [SUMMARY.json]
With a summary file, compares every metric except wall time and exits 1 on a
mismatch.
"""

import csv
import json
import sys

STATES = ["delta_f", "g", "q", "q_hr", "h_st", "omega"]


def summarize(path):
    with open(path, newline="") as f:
        rows = [{k: float(v) for k, v in r.items()} for r in csv.DictReader(f)]
    out = {
        "rows": len(rows),
        "peak_abs_delta_f": max(abs(r["delta_f"]) for r in rows),
        "steady_abs_delta_f": abs(rows[-1]["delta_f"]),
        "peak_abs_speed_error": max(abs(r["omega"] - r["omega_ref"]) for r in rows),
        "max_h_st": max(r["h_st"] for r in rows),
        "min_h_st": min(r["h_st"] for r in rows),
    }
    ctrl = [r for r in rows if r["controller_step"] == 1.0]
    out["max_slack"] = {f"slack_{s}": max([r[f"slack_{s}"] for r in ctrl], default=0.0) for s in STATES}
    out["qp_solves"] = sum(1 for r in ctrl if r["qp_status"] >= 0.0)
    out["qp_failures"] = sum(1 for r in ctrl if r["qp_status"] != 0.0)
    out["max_kkt_residual"] = max([r["kkt_residual"] for r in ctrl if r["qp_status"] == 0.0], default=0.0)
    return out


def main(argv):
    if len(argv) not in (2, 3):
        print(__doc__.strip(), file=sys.stderr)
        return 2
    got = summarize(argv[1])
    if len(argv) == 2:
        json.dump(got, sys.stdout, indent=2)
        print()
        return 0
    with open(argv[2]) as f:
        ref = json.load(f)
    bad = [k for k in got if got[k] != ref.get(k)]
    for k in bad:
        print(f"mismatch {k}: csv {got[k]!r} vs summary {ref.get(k)!r}", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
