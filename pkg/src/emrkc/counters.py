from dataclasses import asdict, dataclass


@dataclass
class EvalCounters:
    """Per-run tallies. Times are seconds spent inside each kind of call."""

    n_fF: int = 0
    n_fS: int = 0
    n_exp_steps: int = 0
    n_linsolves: int = 0
    cg_iters_total: int = 0
    wall_time: float = 0.0
    time_F: float = 0.0
    time_S: float = 0.0
    time_E: float = 0.0

    @property
    def time_other(self):
        return max(0.0, self.wall_time - self.time_F - self.time_S - self.time_E)

    def add(self, other):
        for key in ("n_fF", "n_fS", "n_exp_steps", "n_linsolves", "cg_iters_total",
                    "wall_time", "time_F", "time_S", "time_E"):
            setattr(self, key, getattr(self, key) + getattr(other, key))
        return self

    def as_dict(self):
        d = asdict(self)
        d["time_other"] = self.time_other
        return d
