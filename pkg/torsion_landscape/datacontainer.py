from typing import Any, Dict, List, Tuple, Union

DEFAULT_CONFIG = {
    "geometry.extract.nx": 2048,
    "geometry.extract.ny": 512,
    "geometry.extract.inflate": 0.05,
    "geometry.extract.root_margin": 1.0,
    "geometry.extract.refine_tol": 1e-9,
    "geometry.rect.samples": 4096,
    "geometry.rect.vertical_slack": 0.5,
    "geometry.components.nx": 512,
    "geometry.components.ny": 128,
    "geometry.components.max_nx": 4096,
    "geometry.components.max_ny": 1024,
    "geometry.starshape.margin": 0.1,
    "geometry.starshape.rays": 720,
    "geometry.curvature.zero_tol": 1e-8,
    "geometry.hausdorff.half_width": 2.0,
    "critical.seeds_nx": 256,
    "critical.seeds_ny": 64,
    "critical.newton_tol": 1e-12,
    "critical.degeneracy_tol": 1e-12,
    "critical.max_iter": 60,
    "pde.krylov.rtol": 1e-10,
    "pde.krylov.maxiter": 2000,
    "pde.newton.tol": 1e-10,
    "pde.newton.max_iter": 50,
    "pde.eigen.rtol": 1e-8,
    "pde.eigen.max_iter": 500,
    "cli.auto_epsilon.factor": 2.0,
    "cli.auto_epsilon.max_steps": 20,
}


class ConfigContainer:
    """
    Helper class that contains the numerical settings (resolutions, tolerances, margins)
    used by the extraction, certificate and solver operations.
    Configurations are stored in a dictionary where keys strings are delimited by `.`
    for easier nested access of multiple configurations.
    Keys which were never set fall back to the documented defaults.

    Example:
        The extraction grid of the domain is configured by the
        ``geometry.extract.nx`` and ``geometry.extract.ny`` options,
        the Newton tolerance of the critical point search by ``critical.newton_tol``.
    """

    def __init__(self, config_options: Union[Dict[str, Any], None] = None):
        self.config_dict = {}
        if config_options:
            self.set_config(config_options)

    def set_config(self, config_options: Union[Tuple[str, Any], Dict[str, Any]]):
        """
        Accepts either a tuple of (config, val) or a dictionary containing multiple
        {config1: val1, config2: val2} pairs and updates the config with these values
        """
        if isinstance(config_options, tuple):
            config_options = [config_options]
        self.config_dict.update(config_options)

    def drop_config(self, config_strs: Union[str, List[str]]):
        if isinstance(config_strs, str):
            config_strs = [config_strs]
        for config_key in config_strs:
            self.config_dict.pop(config_key)

    def get(self, key: str) -> Any:
        """
        Return the value stored for the key, or its default.
        Unknown keys raise a KeyError.
        """
        if key in self.config_dict:
            return self.config_dict[key]
        return DEFAULT_CONFIG[key]

    def get_config_by_prefix(self, config_prefix: str):
        """
        Returns all configuration options (set or defaulted) matching the prefix in `config_prefix`

        Example:
            .. code-block:: python

                from torsion_landscape.datacontainer import ConfigContainer

                config = ConfigContainer()
                config.set_config({"pde.krylov.rtol": 1e-12})

                config.get_config_by_prefix("pde.krylov")
                # Returns {
                #   "pde.krylov.maxiter": 2000,
                #   "pde.krylov.rtol": 1e-12
                # }

                config.get_config_by_prefix("missing.key")
                config.get_config_by_prefix(None)
                # Both return {}

        """
        if not config_prefix:
            return {}

        merged = {**DEFAULT_CONFIG, **self.config_dict}
        return {
            key: merged[key] for key in sorted(merged) if key.startswith(config_prefix)
        }

    def as_dict(self) -> Dict[str, Any]:
        """All options, defaults included, sorted by key"""
        merged = {**DEFAULT_CONFIG, **self.config_dict}
        return {key: merged[key] for key in sorted(merged)}
