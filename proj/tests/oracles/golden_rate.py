"""Monte-Carlo estimate of how often the tree policy reaches a single
rewarding entry.

Models the golden-example family: every branch scores 0 unless it contains
the golden action, which scores 1. Rollout 1 is greedy by similarity, later
rollouts select the best-UCT expandable node and sample a fresh child per
level in proportion to similarity. Prints the found-rate per golden rank and
the mean over ranks 4..20.

    python golden_rate.py flat|linear [--width 3] [--trials 2000]
"""

import argparse
import math
import random


def run(s, golden, rng, K=3, P=10, W=3, c=1.41421, eps=1e-6):
    nodes = [dict(parent=None, action=None, depth=0, children=[], Q=0.0, N=0)]

    def path(i):
        acts = []
        while nodes[i]["action"] is not None:
            acts.append(nodes[i]["action"])
            i = nodes[i]["parent"]
        return acts[::-1]

    def valid(i):
        used = set(path(i)) | {nodes[ch]["action"] for ch in nodes[i]["children"]}
        return [a for a in range(len(s)) if a not in used]

    def full(i):
        return len(nodes[i]["children"]) >= W or not valid(i)

    def uct(i):
        n = nodes[i]
        p = nodes[n["parent"]] if n["parent"] is not None else n
        return n["Q"] + c * math.sqrt((math.log(max(p["N"], 1)) + 1) / (n["N"] + eps))

    def expand(i, a):
        nodes.append(dict(parent=i, action=a, depth=nodes[i]["depth"] + 1, children=[], Q=0.0, N=0))
        nodes[i]["children"].append(len(nodes) - 1)
        return len(nodes) - 1

    def backprop(leaf, q):
        nodes[leaf]["Q"] = q
        nodes[leaf]["N"] += 1
        cur = leaf
        while nodes[cur]["parent"] is not None:
            p = nodes[nodes[cur]["parent"]]
            best = max(nodes[ch]["Q"] for ch in p["children"])
            p["Q"] = 0.5 * ((p["Q"] * p["N"] + nodes[cur]["Q"]) / (p["N"] + 1) + best)
            p["N"] += 1
            cur = nodes[cur]["parent"]

    found = False
    cur = 0
    for _ in range(K):
        cur = expand(cur, max(valid(cur), key=lambda a: (s[a], -a)))
    q = 1.0 if golden in path(cur) else 0.0
    found |= q > 0
    backprop(cur, q)

    for _ in range(P - 1):
        cands = [i for i in range(len(nodes)) if nodes[i]["depth"] < K and not full(i)]
        if not cands:
            break
        cur = max(cands, key=lambda i: (uct(i), -i))
        while nodes[cur]["depth"] < K:
            v = valid(cur)
            r = rng.random() * sum(s[a] for a in v)
            acc = 0.0
            for a in v:
                acc += s[a]
                if r < acc:
                    break
            cur = expand(cur, a)
        q = 1.0 if golden in path(cur) else 0.0
        found |= q > 0
        backprop(cur, q)
    return found


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("profile", choices=["flat", "linear"])
    ap.add_argument("--width", type=int, default=3)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    if args.profile == "linear":
        s = [max((20 - r) / 19, 1e-3) for r in range(1, 21)]
    else:
        s = [1.0] * 19 + [1e-3]
    rates = []
    for rank in range(4, 21):
        f = sum(run(s, rank - 1, rng, W=args.width) for _ in range(args.trials)) / args.trials
        rates.append(f)
        print(rank, round(f, 3))
    print("mean", round(sum(rates) / len(rates), 4))


if __name__ == "__main__":
    main()
