import areapo.config
import areapo.dynamics
import areapo.environment


def sample_params():
    return areapo.dynamics.ModelParams(**areapo.config.default_plant())


def sample_spec(task="pendubot"):
    return areapo.environment.EnvSpec(
        task=areapo.dynamics.ActuationConfig(task), params=sample_params()
    )
