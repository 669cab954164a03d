import numpy
import areapo.dynamics
from .sample import sample_params


class DynamicsSuite:
    params = [1, 64, 4096]
    param_names = ["batch"]

    def setup(self, batch):
        self.plant = sample_params()
        rng = numpy.random.default_rng(0)
        self.x = rng.normal(size=(batch, 4))
        self.torques = rng.normal(size=(batch, 2))

    def time_integrate(self, batch):
        areapo.dynamics.integrate(self.x, self.torques, 0.01, self.plant, substep=0.002)

    def time_energy(self, batch):
        areapo.dynamics.energy(self.x, self.plant)
