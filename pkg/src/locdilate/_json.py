import numpy as np

from .errors import StructuralError


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }


def matrix_from_json(obj) -> np.ndarray:
    """Accepts the {"rows", "cols", "re", "im"} object or a plain nested list of reals."""
    if isinstance(obj, list):
        try:
            m = np.asarray(obj, dtype=float)
        except (TypeError, ValueError) as exc:
            raise StructuralError(f"malformed matrix: {exc}") from exc
        if m.ndim != 2:
            raise StructuralError(f"a matrix must be a list of rows, got {m.ndim} dimensions")
        return m.astype(complex)
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float).reshape(rows, cols)
        im = obj.get("im")
        im = np.zeros((rows, cols)) if im is None else np.asarray(im, dtype=float).reshape(rows, cols)
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"malformed matrix object: {exc}") from exc
    return re + 1j * im


def vector_to_json(v) -> dict:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return {"re": v.real.tolist(), "im": v.imag.tolist()}
