"""Decision-function comparison: linear design (p=50) and cosine design (p=20, n=10000).

Usage: python3 scripts/run_linear_nonlinear.py [--replications 20] [--cosine-replications 5]
"""
from sweep import parser, run_presets


def main():
    ap = parser(__doc__.splitlines()[0], 20, "runs/decision_functions")
    ap.add_argument("--cosine-replications", type=int, default=5)
    args = ap.parse_args()
    run_presets(["linear", "cosine"], args, replications={"cosine": args.cosine_replications})


if __name__ == "__main__":
    main()
