import csv
import json
import math
from typing import Iterable, List, Sequence, Union

from .errors import ParseError

CSV_COLUMNS = ["atom_id", "weight", "cell_id", "quantity", "value_re", "value_im"]


def format_float(value: float) -> str:
    """Format a float with 17 significant digits so it parses back exactly"""
    return format(float(value), '.17g')


def encode_complex(value: complex) -> Union[List[float], str]:
    """Encode a complex number as [re, im]; infinities become "inf" """
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        return "inf"
    return [float(value.real), float(value.imag)]


def decode_complex(payload) -> complex:
    """Decode [re, im], a bare real number, or "inf" """
    if isinstance(payload, str):
        if payload.strip().lower() == "inf":
            return complex(math.inf, 0.0)
        raise ValueError(f"unrecognised scalar {payload!r}")
    if isinstance(payload, (int, float)) and not isinstance(payload, bool):
        return complex(float(payload), 0.0)
    if isinstance(payload, (list, tuple)) and len(payload) == 2:
        return complex(float(payload[0]), float(payload[1]))
    raise ValueError(f"expected [re, im], got {payload!r}")


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def save_json(data, filename: str):
    """Save data as UTF-8 JSON file"""
    with open(filename, 'w', encoding='utf-8') as f:
        f.write(dumps_json(data))


def loads_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from e


def load_json(filename: str):
    """Load data from UTF-8 JSON file"""
    with open(filename, 'r', encoding='utf-8') as f:
        return loads_json(f.read())


def csv_row(atom_id: str, weight: float, cell_id: str, quantity: str, value: complex) -> List[str]:
    value = complex(value)
    return [atom_id, format_float(weight), cell_id, quantity,
            format_float(value.real), format_float(value.imag)]


def write_csv(stream, rows: Iterable[Sequence[str]]):
    """Write rows under the standard header to an open text stream"""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row)


def read_csv(stream) -> List[dict]:
    return list(csv.DictReader(stream))
