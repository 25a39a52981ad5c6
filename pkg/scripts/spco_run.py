"""Run the learned-view loop on an SBM (or an edge-list file) and print the epoch trace.

    python3 scripts/spco_run.py --epochs 10 --theta 0.1
    python3 scripts/spco_run.py --graph my.edges --out runs/spco
"""
import argparse
from pathlib import Path

from spectraforge.graph import Graph, edge_list_text, generate_sbm, load_edge_list
from spectraforge.report import write_report
from spectraforge.spco import SpcoConfig, run_spco


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--graph", help="edge list; default is a two-block SBM")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--theta", type=float, default=0.1, help="final cost scale")
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", help="directory for trace and view")
    args = p.parse_args()

    g = load_edge_list(args.graph) if args.graph else generate_sbm([50, 50], 0.1, 0.01, seed=args.seed)
    cfg = SpcoConfig(theta_final=args.theta, total_epochs=args.epochs, eps=args.eps, eta=args.eta,
                     seed=args.seed)
    view, trace, _ = run_spco(g, cfg)
    print(f"{'epoch':>5}{'theta':>9}{'match+':>12}{'match-':>12}{'margin':>9}")
    for r in trace:
        print(f"{r['epoch']:>5}{r['theta']:>9.4f}{r['match_plus']:>12.4g}{r['match_minus']:>12.4g}"
              f"{r['game_margin']:>9.3f}")
    diff = abs(view - g.adjacency()).sum() / 2
    print(f"edges {g.num_edges}, total weight change {diff:.4g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(trace, out / "spco_trace.jsonl", "jsonl")
        (out / "spco_view.edges").write_text(edge_list_text(Graph.from_adjacency(view)))


if __name__ == "__main__":
    main()
