"""Feynman-Kac transport with speed eps converges to multiplication by
exp(t beta) as eps -> 0, and every image stays non-increasing."""
import numpy as np

from shapelab.experiments import trotter_kato_fk


def main():
    report, *_ = trotter_kato_fk(np.random.default_rng(0), count=3)
    print(report.tables["errors"])
    print("verdict:", report.verdict.value)


if __name__ == "__main__":
    main()
