"""
### ERRORS : Exceptions communes de la boîte à outils
Chaque exception porte le code de sortie de la ligne de commande (`exit_code`).
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGENCE = 3
EXIT_PARTIAL = 4


class GPSError(Exception):
    """Erreur de base de la boîte à outils."""
    exit_code = EXIT_USAGE


class UsageError(GPSError):
    """Mauvaise utilisation de la ligne de commande (options invalides, combinaisons interdites)."""
    exit_code = EXIT_USAGE


class DataError(GPSError, ValueError):
    """Données invalides ou incompatibles, échec de lecture/écriture."""
    exit_code = EXIT_DATA


class LatticeMismatchError(DataError):
    """Deux champs ne sont pas définis sur le même réseau."""
    def __init__(self, expected: tuple[int, ...], got: tuple[int, ...], *, what: str = 'champ'):
        super().__init__(f"Réseau incompatible pour {what} : attendu {expected}, reçu {got}")
        self.expected = expected
        self.got = got


class ScheduleError(GPSError, ValueError):
    """Calendrier d'étapes, de filtres ou de σ incohérent."""
    exit_code = EXIT_USAGE


class CalibrationError(DataError):
    """La calibration du flux n'atteint pas le niveau de bruit visé."""
    def __init__(self, target: float, achieved: float):
        super().__init__(f"Calibration impossible : R_noise visé {target:.4%}, obtenu {achieved:.4%}")
        self.target = target
        self.achieved = achieved


class DivergenceError(GPSError, ArithmeticError):
    """Un itéré contient des valeurs non finies."""
    exit_code = EXIT_DIVERGENCE

    def __init__(self, iteration: int, what: str = 'z'):
        super().__init__(f"Divergence du solveur à l'itération {iteration} (valeurs non finies dans {what})")
        self.iteration = iteration
        self.what = what
