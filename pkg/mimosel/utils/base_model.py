from abc import ABCMeta, abstractmethod
from copy import copy
import inspect


class BaseMode(metaclass=ABCMeta):
    """A selection strategy over the N x M virtual array.

    Child classes declare the counts they need in `required_counts` and
    implement the structure of their feasible set: the quadratic
    constraint list, the binary feasibility predicate, the structured
    rounding and the enumeration of feasible index sets.
    """
    name = None
    default_conf = {}
    required_counts = []

    def __init__(self, conf):
        """Check the geometry and counts and call the _init of the child."""
        self.conf = conf = {**self.default_conf, **conf}
        self.required_counts = copy(self.required_counts)
        for key in ['M', 'N'] + self.required_counts:
            if conf.get(key) is None:
                raise ValueError(f'Missing count {key} for mode {self.name}.')
            if int(conf[key]) != conf[key]:
                raise ValueError(f'Count {key} must be an integer, '
                                 f'got {conf[key]}.')
        self.M, self.N = int(conf['M']), int(conf['N'])
        if self.M < 1 or self.N < 1:
            raise ValueError(f'Invalid array size {self.M}x{self.N}.')
        self._init(conf)

    @property
    def size(self):
        return self.M * self.N

    @property
    def counts(self):
        return {k: int(self.conf[k]) for k in self.required_counts}

    @property
    def label(self):
        counts = ','.join(f'{k}={v}' for k, v in self.counts.items())
        return f'{self.name}({counts})'

    @property
    @abstractmethod
    def k(self):
        """Total number of selected virtual elements."""
        raise NotImplementedError

    @abstractmethod
    def _init(self, conf):
        """Validate the counts against the geometry."""
        raise NotImplementedError

    @abstractmethod
    def constraints(self):
        """Quadratic constraints describing the feasible set."""
        raise NotImplementedError

    @abstractmethod
    def is_feasible(self, c):
        raise NotImplementedError

    @abstractmethod
    def round(self, z):
        """Structured rounding of a fractional vector to a feasible one."""
        raise NotImplementedError

    @abstractmethod
    def enumerate(self):
        """Lazily yield the sorted selected indices of every feasible c."""
        raise NotImplementedError

    @abstractmethod
    def neighbors(self, c):
        """Sorted indices of the feasible selections one swap away from c,
        keeping the structure of the mode."""
        raise NotImplementedError

    @abstractmethod
    def num_candidates(self):
        raise NotImplementedError

    def __repr__(self):
        return f'{self.label} on {self.N}x{self.M}'


def dynamic_load(root, mode):
    module_path = f'{root.__name__}.{mode}'
    module = __import__(module_path, fromlist=[''])
    classes = inspect.getmembers(module, inspect.isclass)
    # Filter classes defined in the module
    classes = [c for c in classes if c[1].__module__ == module_path]
    # Filter classes inherited from BaseMode
    classes = [c for c in classes if issubclass(c[1], BaseMode)]
    assert len(classes) == 1, classes
    return classes[0][1]
