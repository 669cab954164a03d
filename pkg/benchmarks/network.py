import numpy
import areapo.network


class MlpSuite:
    params = [64, 1024]
    param_names = ["batch"]

    def setup(self, batch):
        rng = numpy.random.default_rng(0)
        self.net = areapo.network.MlpParams.init([4, 256, 256, 1], rng)
        self.obs = rng.normal(size=(batch, 4))
        out, self.cache = areapo.network.mlp_forward(self.net, self.obs)
        self.grad_out = numpy.ones_like(out)

    def time_forward(self, batch):
        areapo.network.mlp_forward(self.net, self.obs)

    def time_backward(self, batch):
        areapo.network.mlp_backward(self.net, self.cache, self.grad_out)
