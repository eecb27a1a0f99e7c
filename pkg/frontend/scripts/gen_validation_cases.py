"""Generate the validation fixture corpus from the backend validator.

Each case is a raw CTA document run through the server-side validator;
the dashboard's client-side validator must agree on every verdict. Run
from the frontend directory:

    python3 scripts/gen_validation_cases.py
"""

import json
from pathlib import Path

from anontrace import CtaValidationError, validate_cta

T0 = 1_700_006_400
TRIANGLE = [[43.7262, 12.6365], [43.7272, 12.6365], [43.7267, 12.6380]]
SQUARE = [[43.7300, 12.6300], [43.7300, 12.6320], [43.7315, 12.6320], [43.7315, 12.6300]]
TCN_A = "ab" * 16
TCN_B = "CD" * 16


def base(**overrides) -> dict:
    doc = {
        "id": "cta-fixture",
        "authority_id": "umbria-health",
        "regions": [{"polygon": TRIANGLE, "interval": [T0, T0 + 7200]}],
        "tcns": [],
        "max_distance_m": 20.0,
        "min_exposure_s": 900,
        "message": "possible exposure",
        "created_at": T0 + 86400,
        "expires_at": T0 + 86400 + 14 * 86400,
    }
    doc.update(overrides)
    return doc


def without(doc: dict, key: str) -> dict:
    trimmed = dict(doc)
    del trimmed[key]
    return trimmed


def region(polygon, interval) -> dict:
    return {"regions": [{"polygon": polygon, "interval": interval}]}


CASES = [
    ("valid geo only", base()),
    ("valid tcn only", base(regions=[], tcns=[TCN_A])),
    ("valid both channels two regions", base(
        regions=[
            {"polygon": TRIANGLE, "interval": [T0, T0 + 7200]},
            {"polygon": SQUARE, "interval": [T0 + 3600, T0 + 9000]},
        ],
        tcns=[TCN_A],
    )),
    ("valid uppercase hex tcn", base(regions=[], tcns=[TCN_B])),
    ("valid numeric string interval", base(**region(TRIANGLE, [str(T0), str(T0 + 7200)]))),
    ("valid float interval truncates", base(**region(TRIANGLE, [T0 + 0.7, T0 + 7200.9]))),
    ("valid string max distance", base(max_distance_m="20.5")),
    ("valid numeric id", base(id=123)),
    ("valid defaults for optional fields",
     without(without(without(base(), "max_distance_m"), "min_exposure_s"), "message")),
    ("two vertex polygon", base(**region(TRIANGLE[:2], [T0, T0 + 7200]))),
    ("identical consecutive vertices",
     base(**region([TRIANGLE[0], TRIANGLE[0], TRIANGLE[1], TRIANGLE[2]], [T0, T0 + 7200]))),
    ("zero area collinear polygon",
     base(**region([[43.70, 12.60], [43.71, 12.61], [43.72, 12.62]], [T0, T0 + 7200]))),
    ("self intersecting bowtie",
     base(**region([[43.70, 12.60], [43.71, 12.61], [43.71, 12.60], [43.70, 12.61]],
                   [T0, T0 + 7200]))),
    ("self intersecting nonzero area",
     base(**region([[43.70, 12.60], [43.71, 12.61], [43.71, 12.595], [43.70, 12.61]],
                   [T0, T0 + 7200]))),
    ("valid interval strings with spaces", base(**region(TRIANGLE, [f" {T0} ", f" {T0 + 7200} "]))),
    ("valid float min exposure truncates", base(min_exposure_s=900.5)),
    ("antimeridian crossing",
     base(**region([[10.0, 179.9], [10.1, -179.9], [10.2, 179.8]], [T0, T0 + 7200]))),
    ("latitude out of range",
     base(**region([[91.0, 12.63], [43.72, 12.63], [43.72, 12.64]], [T0, T0 + 7200]))),
    ("longitude out of range",
     base(**region([[43.72, 181.0], [43.73, 12.63], [43.72, 12.64]], [T0, T0 + 7200]))),
    ("interval start equals end", base(**region(TRIANGLE, [T0, T0]))),
    ("interval start after end", base(**region(TRIANGLE, [T0 + 7200, T0]))),
    ("interval three elements", base(**region(TRIANGLE, [T0, T0 + 100, T0 + 200]))),
    ("interval not numeric", base(**region(TRIANGLE, ["soon", T0 + 7200]))),
    ("region missing interval", base(regions=[{"polygon": TRIANGLE}])),
    ("region missing polygon", base(regions=[{"interval": [T0, T0 + 7200]}])),
    ("vertex three elements",
     base(**region([[43.72, 12.63, 5.0], [43.73, 12.63], [43.72, 12.64]], [T0, T0 + 7200]))),
    ("vertex not numeric",
     base(**region([["43.72", 12.63], [43.73, 12.63], [43.72, 12.64]], [T0, T0 + 7200]))),
    ("tcn too short", base(regions=[], tcns=["ab" * 15])),
    ("tcn too long", base(regions=[], tcns=["ab" * 17])),
    ("tcn odd length", base(regions=[], tcns=["abc"])),
    ("tcn not hex", base(regions=[], tcns=["zz" * 16])),
    ("tcn not a string", base(regions=[], tcns=[42])),
    ("empty id", base(id="")),
    ("missing id", without(base(), "id")),
    ("empty authority", base(authority_id="")),
    ("missing authority", without(base(), "authority_id")),
    ("expires equals created", base(expires_at=T0 + 86400)),
    ("expires before created", base(expires_at=T0)),
    ("missing created_at", without(base(), "created_at")),
    ("missing expires_at", without(base(), "expires_at")),
    ("no channels at all", base(regions=[], tcns=[])),
    ("negative max distance", base(max_distance_m=-1.0)),
    ("negative min exposure", base(min_exposure_s=-60)),
    ("document is a list", [base()]),
    ("document is a string", "call to action"),
    ("regions not a list", base(regions=7)),
    ("tcns not a list", base(tcns=7)),
]


def main() -> None:
    cases = []
    for name, document in CASES:
        try:
            validate_cta(document)
            cases.append({"name": name, "document": document, "ok": True, "error": None})
        except CtaValidationError as exc:
            cases.append({"name": name, "document": document, "ok": False, "error": str(exc)})
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "validation_cases.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(cases, indent=1) + "\n")
    verdicts = sum(1 for c in cases if c["ok"])
    print(f"wrote {len(cases)} cases ({verdicts} valid) to {out}")


if __name__ == "__main__":
    main()
