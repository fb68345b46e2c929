"""
Bounds router - closed-form values
"""
import math
from typing import Optional

from fastapi import APIRouter, HTTPException, Query

from ..services import bounds as bound_fns
from .common import service_errors

router = APIRouter()


@router.get("/{name}")
def evaluate_bound(
    name: str,
    beta: Optional[float] = Query(None, ge=0, le=1),
    t: Optional[float] = Query(None, ge=0),
    m: Optional[int] = Query(None, ge=1),
    n: Optional[int] = Query(None, ge=0),
    k: Optional[int] = Query(None, ge=0),
    s: Optional[int] = Query(None, ge=0),
    gamma: Optional[float] = Query(None, ge=0, le=1),
    q: Optional[float] = Query(None, ge=0, le=1),
    c: Optional[float] = Query(None, gt=0),
    a: Optional[float] = Query(None, gt=0),
):
    """
    Evaluate one bound by name with its arguments as query parameters.

    Divergent values (union_budget with 2^32 a >= 1) come back as
    {"value": null, "divergent": true}.
    """
    given = {"beta": beta, "t": t, "m": m, "n": n, "k": k, "s": s, "gamma": gamma, "q": q, "c": c, "a": a}
    signatures = {
        "chernoff": ("beta", "t", "m"),
        "exact_binom_tail": ("n", "beta", "k"),
        "q_of_gamma": ("gamma",),
        "contour_bound_shape": ("c", "q", "m"),
        "union_budget": ("a",),
        "e2_bound": ("beta", "s"),
        "lemma_decay_bound": ("c", "gamma", "beta", "t", "m"),
        "word_entropy": ("m",),
    }
    if name not in signatures:
        raise HTTPException(status_code=404, detail={"error": f"unknown bound {name!r}"})
    missing = [arg for arg in signatures[name] if given[arg] is None]
    if missing:
        raise HTTPException(status_code=422, detail={"error": f"missing arguments: {', '.join(missing)}"})
    args = {arg: given[arg] for arg in signatures[name]}
    with service_errors():
        value = getattr(bound_fns, name)(**args)
    if isinstance(value, float) and math.isinf(value):
        return {"bound": name, "args": args, "value": None, "divergent": True}
    return {"bound": name, "args": args, "value": value, "divergent": False}
