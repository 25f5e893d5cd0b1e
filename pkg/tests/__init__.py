from .test_geometry import TestGeometry
from .test_broad_phase import TestBroadPhase
from .test_linkage import TestLinkage
from .test_constraints import TestConstraints
from .test_energy import TestEnergy
from .test_models import TestModels
from .test_uzawa import TestUzawa
from .test_penalty import TestPenalty
from .test_solvers_common import TestSolversCommon
from .test_simulation import TestSimulation
from .test_reference import TestReference
from .test_cli import TestCli
from .test_plot import TestPlot
