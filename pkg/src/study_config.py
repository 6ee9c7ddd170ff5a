"""Validated convergence-study settings."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

from .dofmap import SIDES, Formulation
from .exceptions import ConfigError, InvalidArgumentError
from .local_operators import SchemeKind, SpaceKind
from .mesh_refine import RefineType
from .problems import BuiltinExample

MESH_FAMILIES = ('tri', 'quad', 'voronoi')
RATE_H_CHOICES = ('nominal', 'diameter')
REQUIRED_KEYS = ('example', 'mesh_family', 'sizes', 'lambdas')


@dataclass(frozen=True)
class StudyConfig:
    """One experiment: example, discretization, mesh family and lambda list."""
    name: str
    example: str
    formulation: Optional[str]
    space: str
    scheme: str
    refine_type: int
    mesh_family: str
    sizes: Tuple[int, ...]
    lambdas: Tuple[float, ...]
    mu: float = 1.0
    t_c: float = 0.0
    rng_seed: int = 0
    lloyd_iters: int = 100
    dirichlet_sides: Tuple[str, ...] = ()
    rate_h: str = 'nominal'
    output_dir: str = 'reports/study'
    korn_check_max_dofs: int = 2000
    extra: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> 'StudyConfig':
        """
        Validate a merged study config dict.

        Raises:
            ConfigError: Missing or invalid key (the key is attached)
        """
        for key in REQUIRED_KEYS:
            if config.get(key) is None:
                raise ConfigError(f"Missing required config key '{key}'", key=key)

        def parsed(key, parser, default=None):
            value = config.get(key, default)
            try:
                return parser(value)
            except (InvalidArgumentError, ValueError, TypeError) as e:
                raise ConfigError(f"Invalid value for '{key}': {e}", key=key) from e

        example = parsed('example', BuiltinExample.parse).value
        formulation = None
        if config.get('formulation') is not None:
            formulation = parsed('formulation', Formulation.parse).value
        space = parsed('space', SpaceKind.parse, 'NCOriginal').value
        scheme = parsed('scheme', SchemeKind.parse, 'ReducedRot').value
        refine_type = int(parsed('refine_type', RefineType.parse, 1))

        family = str(config.get('mesh_family')).lower()
        if family not in MESH_FAMILIES:
            raise ConfigError(f"Invalid value for 'mesh_family': '{family}' (expected one of {list(MESH_FAMILIES)})",
                              key='mesh_family')

        sizes = parsed('sizes', lambda v: tuple(int(s) for s in v))
        if not sizes or any(s < 1 for s in sizes) or list(sizes) != sorted(set(sizes)):
            raise ConfigError(f"'sizes' must be a nonempty strictly ascending list of positive integers, "
                              f"got {list(sizes)}", key='sizes')

        lambdas = parsed('lambdas', lambda v: tuple(float(x) for x in v))
        if not lambdas or any(not lam > 0.0 for lam in lambdas):
            raise ConfigError(f"'lambdas' must be a nonempty list of positive values, got {list(lambdas)}",
                              key='lambdas')

        mu = parsed('mu', float, 1.0)
        if not mu > 0.0:
            raise ConfigError(f"'mu' must be > 0, got {mu}", key='mu')

        sides = parsed('dirichlet_sides', lambda v: tuple(str(s) for s in (v or ())), ())
        if any(s not in SIDES for s in sides):
            raise ConfigError(f"'dirichlet_sides' must be a subset of {list(SIDES)}, got {list(sides)}",
                              key='dirichlet_sides')

        rate_h = str(config.get('rate_h', 'nominal')).lower()
        if rate_h not in RATE_H_CHOICES:
            raise ConfigError(f"'rate_h' must be one of {list(RATE_H_CHOICES)}, got '{rate_h}'", key='rate_h')

        known = set(cls.__dataclass_fields__) - {'extra'}
        return cls(
            name=str(config.get('name', 'study')),
            example=example,
            formulation=formulation,
            space=space,
            scheme=scheme,
            refine_type=refine_type,
            mesh_family=family,
            sizes=sizes,
            lambdas=lambdas,
            mu=mu,
            t_c=parsed('t_c', float, 0.0),
            rng_seed=parsed('rng_seed', int, 0),
            lloyd_iters=parsed('lloyd_iters', int, 100),
            dirichlet_sides=sides,
            rate_h=rate_h,
            output_dir=str(config.get('output_dir', 'reports/study')),
            korn_check_max_dofs=parsed('korn_check_max_dofs', int, 2000),
            extra={k: v for k, v in config.items() if k not in known},
        )

    def to_dict(self) -> Dict[str, Any]:
        """Normalized plain-type form; from_dict(to_dict()) reproduces the config."""
        out = asdict(self)
        out.pop('extra')
        out['sizes'] = list(self.sizes)
        out['lambdas'] = list(self.lambdas)
        out['dirichlet_sides'] = list(self.dirichlet_sides)
        return out

    def nominal_h(self, size: int) -> float:
        """Coarse mesh size 1/n, or 1/sqrt(n_seeds) for Voronoi meshes."""
        if self.mesh_family == 'voronoi':
            return 1.0 / size ** 0.5
        return 1.0 / size

    def with_overrides(self, **changes) -> 'StudyConfig':
        data = {**self.extra, **self.to_dict(), **changes}
        return StudyConfig.from_dict(data)
