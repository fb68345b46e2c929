"""
Estimates router - Monte Carlo runs over experiment specs
"""
from typing import List

from fastapi import APIRouter

from ..schemas import EstimateRecord, EstimateRequest, SweepRequest
from ..services.engine import run, sweep
from .common import service_errors

router = APIRouter()


@router.post("", response_model=EstimateRecord)
def create_estimate(request: EstimateRequest):
    """Run `trials` trials of the experiment; identical seeds give identical counts"""
    with service_errors():
        return run(request.spec, request.trials, request.seed, request.workers)


@router.post("/sweep", response_model=List[EstimateRecord])
def create_sweep(request: SweepRequest):
    with service_errors():
        return sweep(request.spec, request.key, request.values, request.trials, request.seed, request.workers)
