"""Lie and Strang splitting of Dirichlet heat flow and multiplication by -x:
observed orders and cone membership of every substep."""
from shapelab.experiments import splitting_study


def main():
    _, out = splitting_study(n_grid=257, n_ref=2048)
    for label, (rows, log) in out.items():
        print(label)
        for n, err, order in rows:
            print(f"  n={n:4d}  error={err:.3e}  order={order:.3f}")
        print(f"  substeps outside NegativeConvex: {len(log.failures())} of {len(log)}")


if __name__ == "__main__":
    main()
