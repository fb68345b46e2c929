"""
Oracle router - words seen from a vertex in one sampled environment
"""
from fastapi import APIRouter

from ..schemas import SeenRequest, SeenResponse
from ..services.environment import Environment, SiteField
from ..services.oracle import SeenQuery, seen_words
from .common import service_errors

router = APIRouter()


@router.post("/seen", response_model=SeenResponse)
def words_seen(request: SeenRequest):
    with service_errors():
        env = Environment(request.params, request.bond_seed, request.box)
        sites = SiteField(request.params.p, request.site_seed, request.box)
        seen = seen_words(SeenQuery(env, sites, request.L, origin=request.origin))
    return SeenResponse(L=seen.length, cardinality=len(seen), complete=seen.is_full(), bitmap_hex=seen.to_hex())
