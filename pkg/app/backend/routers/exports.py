"""
CSV Export router - streams sweep records in the CLI CSV layout
"""
from typing import Iterator

from fastapi import APIRouter
from fastapi.responses import StreamingResponse

from ..emit import CSV_COLUMNS, render_csv
from ..schemas import SweepRequest
from ..services.engine import run, with_value
from .common import service_errors

router = APIRouter()


@router.post("/sweep.csv")
def export_sweep_csv(request: SweepRequest):
    """
    Run a sweep and stream one CSV row per point as it finishes.

    The header is the fixed CSV_COLUMNS order used by `wordperc sweep`.
    """
    with service_errors():
        specs = [with_value(request.spec, request.key, v) for v in request.values]

    def generate_csv() -> Iterator[str]:
        yield ",".join(CSV_COLUMNS) + "\n"
        for spec in specs:
            try:
                record = run(spec, request.trials, request.seed, request.workers)
            except Exception as e:
                yield f"# Error generating row: {e}\n"
                return
            # drop the header line render_csv emits
            yield render_csv([record], request.key).split("\n", 1)[1]

    filename = f"sweep_{request.spec.experiment.kind}_{request.key}.csv"
    return StreamingResponse(
        generate_csv(),
        media_type="text/csv; charset=utf-8",
        headers={"Content-Disposition": f'attachment; filename="{filename}"'},
    )
