from . import module_log
from . import module_logo
from . import module_version
