#!/usr/bin/env python3
"""Writes scale_table_config.json and scale_table.csv from the closed-form
per-group rules. Base values are powers of two so every entry is exact."""

import json
from pathlib import Path

HERE = Path(__file__).resolve().parent

BASE = {
    "eta_base": 2.0**-7,
    "sigma_base_sq": 2.0**-6,
    "lambda_base": 2.0**-3,
    "eps_base": 2.0**-20,
    "rho_match": 1.0,
    "gamma_emb": 2.0,
    "tau": 1.0,
    "n_base": 64,
    "l_base": 4,
    "n": 64,
    "l": 4,
    "alpha": 1.0,
    "tied_embeddings": False,
}
POINTS = [(1, 1), (4, 2), (8, 8)]
RECIPES = ["mup_adamw", "completep_adamw", "spectralp"]
KINDS = ["hidden_matrix", "embedding", "unembedding", "hidden_layernorm",
         "hidden_bias", "hidden_vector", "final_layernorm"]


def row(recipe, kind, mn, ml):
    eta, s2, lam, eps, gam = (BASE[k] for k in
                              ("eta_base", "sigma_base_sq", "lambda_base", "eps_base", "gamma_emb"))
    a = BASE["alpha"]
    if recipe == "mup_adamw":
        ml_eff = 1.0
    else:
        ml_eff = ml
    hidden_eps = eps / mn * ml_eff ** -a
    outer_eps = eps / mn
    if kind == "hidden_matrix":
        fwd = 1.0 if recipe == "mup_adamw" else ml_eff ** -a
        if recipe == "spectralp":
            return eta, lam, None, s2 / mn, fwd
        return eta / mn * ml_eff ** (a - 1), lam * mn, hidden_eps, s2 / mn, fwd
    if kind in ("embedding", "unembedding"):
        fwd = 1.0 / mn if (kind == "unembedding" or BASE["tied_embeddings"]) else None
        return gam * eta, lam, outer_eps, s2, fwd
    if kind == "final_layernorm":
        return eta, 0.0, outer_eps, 0.0, None
    return eta * ml_eff ** (a - 1), 0.0, hidden_eps, 0.0, None


def fmt(x):
    return "n/a" if x is None else repr(float(x))


def main():
    (HERE / "scale_table_config.json").write_text(
        json.dumps({"scaling": BASE}, indent=2) + "\n")
    lines = ["recipe,kind,m_N,m_L,alpha,lr,weight_decay,adamw_eps,init_variance,forward_multiplier"]
    for mn, ml in POINTS:
        for recipe in RECIPES:
            for kind in KINDS:
                vals = row(recipe, kind, float(mn), float(ml))
                lines.append(",".join([recipe, kind, fmt(mn), fmt(ml), fmt(BASE["alpha"])] +
                                      [fmt(v) for v in vals]))
    (HERE / "scale_table.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
