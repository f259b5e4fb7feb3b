"""
### DATAIO : Lecture et écriture des fichiers de la boîte à outils
Format brut (en-tête JSON d'une ligne + valeurs binaires), import CSV, manifestes JSON,
traces CSV et export d'images PGM 16 bits.

Format brut : `{"dtype": "f64"|"c128"|"u8", "shape": [n1, n2], "order": "row-major", "byteorder": "little"}\\n`
suivi de n1·n2 valeurs little-endian (8, 16 ou 1 octets chacune), ligne par ligne.
"""

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Literal

import numpy as np
import numpy.typing as npt
import pandas as pd
from PIL import Image

from common.errors import DataError

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

RAW_DTYPES = {
    'f64': np.dtype('<f8'),
    'c128': np.dtype('<c16'),
    'u8': np.dtype('u1')
}
TRACE_COLUMNS = ['iteration', 'rf', 'sigma', 'gamma', 'stage']
PGM_MAXVAL = 65535

# DOSSIERS ==================================================

def ensure_folder(path: str | Path) -> Path:
    """Crée le dossier de sortie si nécessaire.

    :param path: Dossier
    :return: Chemin du dossier
    """
    folder = Path(path)
    try:
        folder.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"Impossible de créer le dossier {folder} : {e}")
    return folder


# FORMAT BRUT ===============================================

def _raw_code(array: np.ndarray) -> str:
    if array.dtype == np.bool_ or array.dtype == np.uint8:
        return 'u8'
    if np.iscomplexobj(array):
        return 'c128'
    return 'f64'

def write_raw(path: str | Path, array: npt.ArrayLike) -> Path:
    """Écrit un tableau 2D au format brut.

    Les booléens sont écrits en u8, les complexes en c128 et tout le reste en f64.

    :param path: Fichier de destination
    :param array: Tableau 2D
    :return: Chemin du fichier écrit
    """
    array = np.asarray(array)
    if array.ndim != 2:
        raise DataError(f"Seuls les tableaux 2D sont acceptés (reçu {array.ndim}D)")
    code = _raw_code(array)
    header = {'dtype': code, 'shape': list(array.shape), 'order': 'row-major', 'byteorder': 'little'}
    payload = np.ascontiguousarray(array, dtype=RAW_DTYPES[code]).tobytes()
    path = Path(path)
    try:
        with open(path, 'wb') as f:
            f.write(json.dumps(header).encode('utf-8') + b'\n')
            f.write(payload)
    except OSError as e:
        raise DataError(f"Écriture impossible ({path}) : {e}")
    logger.debug(f"Écrit {path} ({code}, {array.shape[0]}x{array.shape[1]})")
    return path

def read_raw(path: str | Path) -> np.ndarray:
    """Lit un tableau au format brut.

    :param path: Fichier source
    :return: Tableau (float64, complex128 ou uint8)
    """
    path = Path(path)
    try:
        content = path.read_bytes()
    except OSError as e:
        raise DataError(f"Lecture impossible ({path}) : {e}")
    line, sep, payload = content.partition(b'\n')
    if not sep:
        raise DataError(f"{path} : en-tête manquant")
    try:
        header = json.loads(line.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise DataError(f"{path} : en-tête JSON invalide")
    if not isinstance(header, dict):
        raise DataError(f"{path} : en-tête JSON invalide")

    code = header.get('dtype')
    shape = header.get('shape')
    if code not in RAW_DTYPES:
        raise DataError(f"{path} : type {code!r} inconnu (attendu {', '.join(RAW_DTYPES)})")
    if not isinstance(shape, list) or len(shape) != 2 or not all(isinstance(n, int) and n > 0 for n in shape):
        raise DataError(f"{path} : dimensions invalides {shape!r}")
    if header.get('order', 'row-major') != 'row-major' or header.get('byteorder', 'little') != 'little':
        raise DataError(f"{path} : seul l'ordre row-major little-endian est pris en charge")

    dtype = RAW_DTYPES[code]
    expected = shape[0] * shape[1] * dtype.itemsize
    if len(payload) != expected:
        raise DataError(f"{path} : {len(payload)} octets de données pour {expected} attendus")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).astype(dtype.newbyteorder('='))

def read_mask(path: str | Path) -> npt.NDArray[np.bool_]:
    """Lit un masque (support ou pixels mesurés) ; toute valeur non nulle vaut True."""
    values = read_raw(path)
    return np.asarray(values != 0)

def read_real(path: str | Path) -> npt.NDArray[np.float64]:
    """Lit un champ réel ; un fichier c128 doit avoir une partie imaginaire nulle."""
    values = read_raw(path)
    if np.iscomplexobj(values):
        if np.any(values.imag != 0):
            raise DataError(f"{path} : champ réel attendu (partie imaginaire non nulle)")
        values = values.real
    return values.astype(np.float64)


# CSV =======================================================

def read_csv_array(path: str | Path, *, centered: bool = False) -> npt.NDArray[np.float64]:
    """Lit un tableau 2D de réels séparés par des virgules (une ligne de fichier par ligne de tableau).

    :param path: Fichier CSV
    :param centered: Si True, la composante continue est au centre et on la ramène à l'indice (0, 0)
    :return: Tableau float64
    """
    try:
        frame = pd.read_csv(path, header=None, dtype=np.float64)
    except (OSError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Lecture CSV impossible ({path}) : {e}")
    values = frame.to_numpy(dtype=np.float64)
    if values.ndim != 2 or np.isnan(values).any():
        raise DataError(f"{path} : tableau incomplet ou valeurs manquantes")
    return np.fft.ifftshift(values) if centered else values

def load_array(path: str | Path) -> np.ndarray:
    """Lit un tableau brut ou CSV selon l'extension."""
    path = Path(path)
    if path.suffix.lower() == '.csv':
        return read_csv_array(path)
    return read_raw(path)

def write_trace(path: str | Path, rows: Iterable[tuple]) -> Path:
    """Écrit une trace de convergence (itération, R_F, σ, γ, étage)."""
    frame = pd.DataFrame(list(rows), columns=TRACE_COLUMNS)
    return write_frame(path, frame)

def write_frame(path: str | Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    try:
        frame.to_csv(path, index=False, float_format='%.17g')
    except OSError as e:
        raise DataError(f"Écriture impossible ({path}) : {e}")
    return path


# MANIFESTES ================================================

def write_json(path: str | Path, data: dict[str, Any]) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2, ensure_ascii=False, default=_json_default), encoding='utf-8')
    except OSError as e:
        raise DataError(f"Écriture impossible ({path}) : {e}")
    return path

def read_json(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except OSError as e:
        raise DataError(f"Lecture impossible ({path}) : {e}")
    except json.JSONDecodeError as e:
        raise DataError(f"{path} : JSON invalide ({e})")
    if not isinstance(data, dict):
        raise DataError(f"{path} : un objet JSON est attendu")
    return data

def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Type non sérialisable : {type(value).__name__}")


# IMAGES ====================================================

def image_levels(field: npt.ArrayLike, scale: Literal['linear', 'log'] = 'linear', *, shift: bool = False) -> npt.NDArray[np.uint16]:
    """Niveaux de gris 16 bits de |field|, normalisés entre min et max (champ constant → noir).

    :param field: Champ 2D fini
    :param scale: 'linear' ou 'log' (log(1 + |x|))
    :param shift: Si True, recentre la composante continue (diagrammes de diffraction)
    :return: Tableau uint16
    """
    values = np.abs(np.asarray(field))
    if values.ndim != 2:
        raise DataError(f"Seuls les champs 2D sont exportables (reçu {values.ndim}D)")
    if not np.all(np.isfinite(values)):
        raise DataError("Le champ à exporter contient des valeurs non finies")
    if scale == 'log':
        values = np.log1p(values)
    elif scale != 'linear':
        raise DataError(f"Échelle inconnue : {scale!r}")
    if shift:
        values = np.fft.fftshift(values)
    low, high = float(values.min()), float(values.max())
    if high == low:
        return np.zeros(values.shape, dtype=np.uint16)
    return np.rint((values - low) / (high - low) * PGM_MAXVAL).astype(np.uint16)

def export_image(field: npt.ArrayLike, path: str | Path, scale: Literal['linear', 'log'] = 'linear', *, shift: bool = False) -> Path:
    """Exporte |field| en PGM binaire 16 bits (P5, maxval 65535, big-endian).

    :param field: Champ 2D fini
    :param path: Fichier de destination
    :param scale: 'linear' ou 'log'
    :param shift: Si True, recentre la composante continue
    :return: Chemin du fichier écrit
    """
    levels = image_levels(field, scale, shift=shift)
    path = Path(path)
    try:
        Image.fromarray(levels.astype(np.int32)).save(path, format='PPM')
    except OSError as e:
        raise DataError(f"Écriture impossible ({path}) : {e}")
    return path

def read_image(path: str | Path) -> npt.NDArray[np.int64]:
    """Relit une image PGM en niveaux entiers."""
    try:
        with Image.open(path) as img:
            return np.asarray(img, dtype=np.int64)
    except OSError as e:
        raise DataError(f"Lecture impossible ({path}) : {e}")
