from . import filesystem
from . import module_prologo
from . import module_rng
from . import status_exception
