"""Delayed transport keeps heads monotone; delayed diffusion with a
half-shifted reaction keeps heads negative convex."""
from shapelab.experiments import delay_study, step_halving_ratio


def main():
    for kind, horizon, dt in (("transport", 3.0, 0.05), ("diffusion", 2.0, 0.025)):
        states, log = delay_study(kind, 0.5, 0.5, horizon, dt)
        d1, d2 = step_halving_ratio(kind, 0.5, 0.5, horizon, dt)
        print(f"{kind}: {len(states)} heads, all in cone: {log.all_member}, "
              f"step-halving ratio {d2 / d1:.3f}")


if __name__ == "__main__":
    main()
