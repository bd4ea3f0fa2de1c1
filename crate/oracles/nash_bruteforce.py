"""Brute-force best responses for small games, used to freeze expected values
in the Rust tests. Enumerates every plan; no pruning, no search."""
import itertools
import math

THETA = [-math.pi / 2, -math.pi / 3, -math.pi / 6, 0.0, math.pi / 6, math.pi / 3, math.pi / 2]


def wrap(a):
    a = math.fmod(a + math.pi, 2 * math.pi)
    if a <= 0:
        a += 2 * math.pi
    return a - math.pi


def gamma(T):
    if T == 1:
        return [1.0]
    if T == 4:
        return [0.6, 0.7, 0.8, 1.0]
    return [0.6 + 0.4 * k / (T - 1) for k in range(T)]


def rollout(p, h0, v, offsets, dt):
    pts, hs, h = [p], [], h0
    for u in offsets:
        h = wrap(h + u)
        hs.append(h)
        p = (p[0] + v * dt * math.cos(h), p[1] + v * dt * math.sin(h))
        pts.append(p)
    return pts, hs


def cost(agent, offsets, T, dt):
    (p, h0, v) = agent
    g = gamma(T)
    goal = (p[0] + v * T * dt * math.cos(h0), p[1] + v * T * dt * math.sin(h0))
    pts, hs = rollout(p, h0, v, offsets, dt)
    cg = sum(g[k] * math.dist(pts[k + 1], goal) for k in range(T))
    prev, cs = h0, 0.0
    for k in range(T):
        cs += (1 - g[k]) * abs(wrap(hs[k] - prev))
        prev = hs[k]
    return cg + cs


def best_response(agents, i, plans, T, dt, beta):
    others = [rollout(a[0], a[1], a[2], plans[j], dt)[0] for j, a in enumerate(agents) if j != i]
    cands = []
    for idx in itertools.product(range(7), repeat=T):
        offs = [THETA[k] for k in idx]
        pts, _ = rollout(agents[i][0], agents[i][1], agents[i][2], offs, dt)
        ok = all(math.dist(pts[k], q[k]) >= beta for q in others for k in range(1, T + 1))
        if ok:
            cands.append((cost(agents[i], offs, T, dt), sum(abs(u) for u in offs), idx))
    m = min(c[0] for c in cands)
    tied = [c for c in cands if c[0] <= m + 1e-9 * (1 + abs(m))]
    a = min(c[1] for c in tied)
    return next(c for c in tied if c[1] <= a + 1e-12)


def solve(agents, T, dt, beta):
    plans = [[0.0] * T for _ in agents]
    for _ in range(20):
        changed = False
        for i in range(len(agents)):
            c, _, idx = best_response(agents, i, plans, T, dt, beta)
            new = [THETA[k] for k in idx]
            if new != plans[i]:
                plans[i], changed = new, True
        if not changed:
            return plans
    return None


if __name__ == "__main__":
    # head-on pair, T = 2, beta = 1: straight plans end 0.8 m apart
    agents = [((0.0, 0.0), 0.0, 1.0), ((4.0, 0.0), math.pi, 1.0)]
    T, dt, beta = 2, 1.2, 1.0
    c, a, idx = best_response(agents, 0, [[0.0] * T, [0.0] * T], T, dt, beta)
    print("br h1 vs straight:", idx, repr(c))
    plans = solve(agents, T, dt, beta)
    for i, p in enumerate(plans):
        idx = tuple(THETA.index(u) for u in p)
        others = [pl for j, pl in enumerate(plans) if j != i]
        print("nash", i, idx, repr(cost(agents[i], p, T, dt)))
