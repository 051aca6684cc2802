#!/usr/bin/env python3
"""Solve an LP/MPS model with HiGHS and write a `name value` solution file.

usage: highs_solve.py MODEL SOLUTION [TIME_LIMIT]

Plug into the external solver mode with the command
    python3 scripts/highs_solve.py {model} {solution} {time_limit}
"""
import math
import sys

import highspy


def main() -> int:
    if len(sys.argv) not in (3, 4):
        print(__doc__.strip(), file=sys.stderr)
        return 2
    model, out = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 0.0)
    if len(sys.argv) == 4 and sys.argv[3] != "inf":
        h.setOptionValue("time_limit", float(sys.argv[3]))
    if h.readModel(model) != highspy.HighsStatus.kOk:
        print(f"cannot read {model}", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    info = h.getInfo()
    has_point = info.primal_solution_status == 2
    if status == ms.kOptimal:
        word = "optimal"
    elif status in (ms.kInfeasible, ms.kUnboundedOrInfeasible, ms.kUnbounded):
        word = "infeasible"
    elif status == ms.kTimeLimit:
        word = "feasible" if has_point else "timelimit"
    else:
        word = "feasible" if has_point else "infeasible"
    with open(out, "w") as f:
        f.write(f"# status {word}\n")
        if word in ("optimal", "feasible"):
            lp = h.getLp()
            values = h.getSolution().col_value
            for name, value in zip(lp.col_names_, values):
                if not math.isfinite(value):
                    value = 0.0
                f.write(f"{name} {value:.17g}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
