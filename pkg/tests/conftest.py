import shlex
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
STUB_SCORER = TESTS_DIR / "stub_scorer.py"


def stub_endpoint(mode: str, sleep_ms: int = 0) -> str:
    """Endpoint descriptor spawning the stub scorer subprocess."""
    cmd = f"{shlex.quote(sys.executable)} {shlex.quote(str(STUB_SCORER))} --mode {mode}"
    if sleep_ms:
        cmd += f" --sleep-ms {sleep_ms}"
    return cmd


@pytest.fixture
def tiny_corpus():
    from claim_anchor.corpus import Document, make_corpus

    return make_corpus(
        [
            Document("u1", "Bile salts in gut and liver pathophysiology", "Bile salts are key signalling molecules."),
            Document("u2", "Aerosol transmission of respiratory viruses", "Indoor airflow drives exposure risk."),
            Document("u3", "Vaccine efficacy against severe outcomes", ""),
        ]
    )
