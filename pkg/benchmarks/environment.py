import numpy
import areapo.environment
from .sample import sample_spec


class VectorEnvSuite:
    params = [1, 64]
    param_names = ["n_envs"]

    def setup(self, n_envs):
        self.env = areapo.environment.VectorPendulumEnv(sample_spec(), n_envs=n_envs, seed=0)
        self.env.reset()
        self.actions = numpy.random.default_rng(0).uniform(-1, 1, size=(100, n_envs))

    def time_step(self, n_envs):
        for a in self.actions:
            self.env.step(a)
