"""Trial data model, CSV ingestion, endpoint derivation and baseline summaries.

The central object is :class:`TrialDataset`, an immutable two-group cohort
stored column-wise (numpy arrays per endpoint) with a row-wise
:class:`Subject` view for pairwise code. Ingestion targets ACTG 175-shaped
CSV files; the column mapping is configurable, so any file with an arm
column, a follow-up time/event pair and CD4 columns can be loaded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    CsvParseError,
    EmptyGroupError,
    InvalidContrastError,
    MissingColumnError,
    SchemaMismatchError,
)


class Group(IntEnum):
    CONTROL = 0
    TREATMENT = 1


class EndpointKind(Enum):
    TIME_TO_EVENT = "time_to_event"
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Direction(Enum):
    HIGHER_IS_BETTER = "higher_is_better"
    LOWER_IS_BETTER = "lower_is_better"


class MissingPolicy(Enum):
    TIE_AT_LEVEL = "tie_at_level"
    COMPLETE_CASE = "complete_case"


@dataclass(frozen=True)
class EndpointSpec:
    """Declaration of one analysis endpoint.

    ``priority`` orders the comparison hierarchy (1 = compared first).
    Time-to-event endpoints have fixed semantics (earlier event = worse),
    so a LOWER_IS_BETTER flag on them is rejected rather than interpreted.
    """

    name: str
    kind: EndpointKind
    priority: int
    direction: Direction = Direction.HIGHER_IS_BETTER
    missing_policy: MissingPolicy = MissingPolicy.TIE_AT_LEVEL

    def __post_init__(self):
        if not self.name:
            raise ValueError("endpoint name must be non-empty")
        if self.priority < 1:
            raise ValueError(f"priority must be >= 1, got {self.priority}")
        if (
            self.kind is EndpointKind.TIME_TO_EVENT
            and self.direction is Direction.LOWER_IS_BETTER
        ):
            raise ValueError(
                "time-to-event endpoints may not carry LOWER_IS_BETTER; "
                "event semantics are fixed by the kind"
            )


def validate_hierarchy(specs: Sequence[EndpointSpec]) -> tuple[EndpointSpec, ...]:
    """Check priorities are distinct and contiguous from 1; return specs sorted."""
    if not specs:
        raise ValueError("hierarchy must contain at least one endpoint")
    priorities = sorted(s.priority for s in specs)
    if priorities != list(range(1, len(specs) + 1)):
        raise ValueError(
            f"hierarchy priorities must be distinct and contiguous from 1, got {priorities}"
        )
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("hierarchy endpoint names must be unique")
    return tuple(sorted(specs, key=lambda s: s.priority))


@dataclass(frozen=True)
class TimeToEventValue:
    time: float
    event_observed: bool

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0:
            raise ValueError(f"event/censoring time must be finite and >= 0, got {self.time}")

    @property
    def present(self) -> bool:
        return True


@dataclass(frozen=True)
class ContinuousValue:
    value: float = math.nan
    present: bool = True

    def __post_init__(self):
        if self.present and not math.isfinite(self.value):
            raise ValueError("a present continuous value must be finite")

    @classmethod
    def missing(cls) -> "ContinuousValue":
        return cls(math.nan, present=False)


@dataclass(frozen=True)
class BinaryValue:
    value: int = 0
    present: bool = True

    def __post_init__(self):
        if self.present and self.value not in (0, 1):
            raise ValueError(f"binary value must be 0 or 1, got {self.value}")

    @classmethod
    def missing(cls) -> "BinaryValue":
        return cls(0, present=False)


OutcomeValue = Union[TimeToEventValue, ContinuousValue, BinaryValue]

_KIND_FOR_VALUE = {
    TimeToEventValue: EndpointKind.TIME_TO_EVENT,
    ContinuousValue: EndpointKind.CONTINUOUS,
    BinaryValue: EndpointKind.BINARY,
}


@dataclass(frozen=True)
class Subject:
    id: str
    group: Group
    outcomes: Mapping[str, OutcomeValue]
    covariates: Mapping[str, float] = field(default_factory=dict)


class TrialDataset:
    """Immutable cohort of subjects with per-endpoint outcome columns.

    Construct with :meth:`from_subjects`. Arrays returned by accessors are
    read-only views; ``with_groups`` and ``subset`` return new datasets that
    share outcome storage, which keeps relabeling cheap inside permutation
    loops.
    """

    def __init__(self, *, _specs, _ids, _group, _columns, _covariates):
        self._specs: tuple[EndpointSpec, ...] = _specs
        self._spec_by_name = {s.name: s for s in _specs}
        self._ids: tuple[str, ...] = _ids
        self._group: np.ndarray = _group
        self._columns: dict[str, tuple[np.ndarray, np.ndarray]] = _columns
        self._covariates: dict[str, np.ndarray] = _covariates
        n1 = int(self._group.sum())
        n0 = len(self._group) - n1
        if n1 < 1 or n0 < 1:
            raise EmptyGroupError(
                f"both groups must be non-empty (treatment={n1}, control={n0})"
            )
        self._n_treatment = n1
        self._n_control = n0

    # -- construction ------------------------------------------------------

    @classmethod
    def from_subjects(
        cls, subjects: Sequence[Subject], specs: Sequence[EndpointSpec]
    ) -> "TrialDataset":
        specs = tuple(specs)
        if not subjects:
            raise EmptyGroupError("dataset must contain at least one subject per group")
        ids = tuple(s.id for s in subjects)
        if len(set(ids)) != len(ids):
            raise ValueError("subject ids must be unique")
        seen = set()
        for s in specs:
            if s.name in seen:
                raise ValueError(f"duplicate endpoint spec {s.name!r}")
            seen.add(s.name)

        n = len(subjects)
        group = np.fromiter((int(s.group) for s in subjects), dtype=np.int8, count=n)
        columns: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for spec in specs:
            a = np.empty(n, dtype=np.float64)
            b = np.empty(n, dtype=bool)
            for i, subj in enumerate(subjects):
                try:
                    val = subj.outcomes[spec.name]
                except KeyError:
                    raise ValueError(
                        f"subject {subj.id!r} lacks an outcome for endpoint {spec.name!r}"
                    ) from None
                if _KIND_FOR_VALUE[type(val)] is not spec.kind:
                    raise ValueError(
                        f"subject {subj.id!r}: outcome for {spec.name!r} is "
                        f"{type(val).__name__}, expected kind {spec.kind.value}"
                    )
                if spec.kind is EndpointKind.TIME_TO_EVENT:
                    a[i] = val.time
                    b[i] = val.event_observed
                else:
                    a[i] = val.value if val.present else math.nan
                    b[i] = val.present
            columns[spec.name] = (_frozen(a), _frozen(b))

        cov_names = sorted({k for s in subjects for k in s.covariates})
        covariates = {}
        for name in cov_names:
            arr = np.full(n, math.nan)
            for i, subj in enumerate(subjects):
                v = subj.covariates.get(name)
                if v is not None:
                    arr[i] = float(v)
            covariates[name] = _frozen(arr)

        return cls(
            _specs=specs,
            _ids=ids,
            _group=_frozen(group),
            _columns=columns,
            _covariates=covariates,
        )

    # -- basic shape -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._ids)

    @property
    def n_treatment(self) -> int:
        return self._n_treatment

    @property
    def n_control(self) -> int:
        return self._n_control

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def endpoint_specs(self) -> tuple[EndpointSpec, ...]:
        return self._specs

    def spec(self, name: str) -> EndpointSpec:
        try:
            return self._spec_by_name[name]
        except KeyError:
            raise KeyError(f"no endpoint named {name!r}") from None

    def has_endpoint(self, name: str) -> bool:
        return name in self._spec_by_name

    # -- column accessors ----------------------------------------------------

    @property
    def group_codes(self) -> np.ndarray:
        """int8 array, 1 = treatment, 0 = control."""
        return self._group

    @property
    def treatment_mask(self) -> np.ndarray:
        return self._group == 1

    def times(self, name: str) -> np.ndarray:
        self._require_kind(name, EndpointKind.TIME_TO_EVENT)
        return self._columns[name][0]

    def events_observed(self, name: str) -> np.ndarray:
        self._require_kind(name, EndpointKind.TIME_TO_EVENT)
        return self._columns[name][1]

    def values(self, name: str) -> np.ndarray:
        """Continuous/binary values; NaN where absent."""
        spec = self.spec(name)
        if spec.kind is EndpointKind.TIME_TO_EVENT:
            raise ValueError(f"{name!r} is time-to-event; use times()/events_observed()")
        return self._columns[name][0]

    def present(self, name: str) -> np.ndarray:
        spec = self.spec(name)
        if spec.kind is EndpointKind.TIME_TO_EVENT:
            return np.ones(self.n, dtype=bool)
        return self._columns[name][1]

    def _require_kind(self, name: str, kind: EndpointKind):
        if self.spec(name).kind is not kind:
            raise ValueError(f"endpoint {name!r} is not {kind.value}")

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(self._covariates)

    def has_covariate(self, name: str) -> bool:
        return name in self._covariates

    def covariate(self, name: str) -> np.ndarray:
        try:
            return self._covariates[name]
        except KeyError:
            raise KeyError(f"no covariate named {name!r}") from None

    # -- row view ------------------------------------------------------------

    def subject(self, i: int) -> Subject:
        outcomes: dict[str, OutcomeValue] = {}
        for spec in self._specs:
            a, b = self._columns[spec.name]
            if spec.kind is EndpointKind.TIME_TO_EVENT:
                outcomes[spec.name] = TimeToEventValue(float(a[i]), bool(b[i]))
            elif spec.kind is EndpointKind.CONTINUOUS:
                outcomes[spec.name] = (
                    ContinuousValue(float(a[i])) if b[i] else ContinuousValue.missing()
                )
            else:
                outcomes[spec.name] = (
                    BinaryValue(int(a[i])) if b[i] else BinaryValue.missing()
                )
        covs = {
            k: float(v[i]) for k, v in self._covariates.items() if not math.isnan(v[i])
        }
        return Subject(self._ids[i], Group(int(self._group[i])), outcomes, covs)

    @property
    def subjects(self) -> tuple[Subject, ...]:
        return tuple(self.subject(i) for i in range(self.n))

    # -- derived datasets ------------------------------------------------------

    def with_groups(self, group_codes: np.ndarray) -> "TrialDataset":
        """Same cohort with new group labels (shares outcome storage)."""
        g = np.asarray(group_codes, dtype=np.int8)
        if g.shape != self._group.shape:
            raise ValueError("group label array has wrong length")
        return TrialDataset(
            _specs=self._specs,
            _ids=self._ids,
            _group=_frozen(g.copy()),
            _columns=self._columns,
            _covariates=self._covariates,
        )

    def subset(self, indices: np.ndarray) -> "TrialDataset":
        idx = np.asarray(indices)
        columns = {
            k: (_frozen(a[idx].copy()), _frozen(b[idx].copy()))
            for k, (a, b) in self._columns.items()
        }
        covs = {k: _frozen(v[idx].copy()) for k, v in self._covariates.items()}
        return TrialDataset(
            _specs=self._specs,
            _ids=tuple(self._ids[i] for i in idx),
            _group=_frozen(self._group[idx].copy()),
            _columns=columns,
            _covariates=covs,
        )

    # -- equality (used by round-trip checks) ----------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrialDataset):
            return NotImplemented
        if self._ids != other._ids or self._specs != other._specs:
            return False
        if not np.array_equal(self._group, other._group):
            return False
        for name in self._columns:
            a1, b1 = self._columns[name]
            a2, b2 = other._columns[name]
            if not np.array_equal(a1, a2, equal_nan=True) or not np.array_equal(b1, b2):
                return False
        if set(self._covariates) != set(other._covariates):
            return False
        for name, v in self._covariates.items():
            if not np.array_equal(v, other._covariates[name], equal_nan=True):
                return False
        return True

    def __hash__(self):
        return hash((self._ids, self._specs))

    def __repr__(self):
        return (
            f"TrialDataset(n={self.n}, treatment={self.n_treatment}, "
            f"control={self.n_control}, endpoints={[s.name for s in self._specs]})"
        )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Contrasts
# ---------------------------------------------------------------------------

DEFAULT_CONTRAST = "rest_vs_0"


@dataclass(frozen=True)
class Contrast:
    """Arm codes on each side; ``None`` means "every other arm" (rest)."""

    treatment_arms: frozenset[int] | None
    control_arms: frozenset[int] | None

    def __post_init__(self):
        if self.treatment_arms is None and self.control_arms is None:
            raise InvalidContrastError("at most one side of a contrast may be 'rest'")
        if self.treatment_arms is not None and self.control_arms is not None:
            if self.treatment_arms & self.control_arms:
                raise InvalidContrastError("contrast sides overlap")
            if not self.treatment_arms or not self.control_arms:
                raise InvalidContrastError("contrast sides must be non-empty")


def parse_contrast(text: str) -> Contrast:
    """Parse ``"<treatment>_vs_<control>"`` where a side is ``rest`` or
    ``+``-joined arm codes, e.g. ``"rest_vs_0"``, ``"1+2+3_vs_0"``, ``"3_vs_0"``."""
    parts = text.split("_vs_")
    if len(parts) != 2:
        raise InvalidContrastError(f"contrast {text!r} is not of the form A_vs_B")

    def side(tok: str) -> frozenset[int] | None:
        tok = tok.strip()
        if tok == "rest":
            return None
        try:
            return frozenset(int(p) for p in tok.split("+"))
        except ValueError:
            raise InvalidContrastError(f"bad arm list {tok!r} in contrast {text!r}") from None

    return Contrast(side(parts[0]), side(parts[1]))


def _apply_contrast(arms: np.ndarray, contrast: Contrast) -> tuple[np.ndarray, np.ndarray]:
    """Return (kept_indices, group_codes) for the contrast over an arm column."""
    if arms.size == 0:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.int8)
    observed = set(int(a) for a in np.unique(arms[~np.isnan(arms)]))
    named = set()
    for s in (contrast.treatment_arms, contrast.control_arms):
        if s is not None:
            named |= s
    missing = named - observed
    if missing:
        raise InvalidContrastError(f"contrast names absent arm(s) {sorted(missing)}")
    if contrast.treatment_arms is None:
        control = contrast.control_arms
        is_control = np.isin(arms, list(control))
        kept = ~np.isnan(arms)
        group = np.where(is_control, 0, 1).astype(np.int8)
    elif contrast.control_arms is None:
        treatment = contrast.treatment_arms
        is_treat = np.isin(arms, list(treatment))
        kept = ~np.isnan(arms)
        group = np.where(is_treat, 1, 0).astype(np.int8)
    else:
        is_treat = np.isin(arms, list(contrast.treatment_arms))
        is_control = np.isin(arms, list(contrast.control_arms))
        kept = is_treat | is_control
        group = np.where(is_treat, 1, 0).astype(np.int8)
    idx = np.flatnonzero(kept)
    return idx, group[idx]


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

MISSING_TOKENS = frozenset({"", "NA", "N/A", "NaN", "nan", "."})

RAW_EVENT_ENDPOINT = "composite_event"
RAW_CD4_WEEK20 = "cd4_week20"
RAW_CD4_WEEK96 = "cd4_week96"
DERIVED_CD4_CHANGE = "cd4_change_20wk"


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the CSV columns carrying each ingested field.

    Optional fields may be set to ``None`` to skip them. ``covariates`` maps
    standardized covariate names to CSV column names.
    """

    subject_id: str = "pidnum"
    arm: str = "arms"
    days: str = "days"
    event: str = "cens"
    cd4_baseline: str | None = "cd40"
    cd4_week20: str | None = "cd420"
    cd4_week96: str | None = "cd496"
    covariates: Mapping[str, str] = field(
        default_factory=lambda: {
            "age": "age",
            "male": "gender",
            "race": "race",
            "homosexual": "homo",
            "ivdrug": "drugs",
            "hemophilia": "hemo",
            "karnofsky": "karnof",
            "symptomatic": "symptom",
            "prior_art": "str2",
        }
    )

    def named_columns(self) -> list[str]:
        cols = [self.subject_id, self.arm, self.days, self.event]
        for c in (self.cd4_baseline, self.cd4_week20, self.cd4_week96):
            if c is not None:
                cols.append(c)
        cols.extend(self.covariates.values())
        return cols


DEFAULT_ACTG_MAPPING = ColumnMapping()


def _raw_specs(mapping: ColumnMapping) -> tuple[EndpointSpec, ...]:
    specs = [EndpointSpec(RAW_EVENT_ENDPOINT, EndpointKind.TIME_TO_EVENT, priority=1)]
    prio = 2
    if mapping.cd4_week20 is not None:
        specs.append(EndpointSpec(RAW_CD4_WEEK20, EndpointKind.CONTINUOUS, priority=prio))
        prio += 1
    if mapping.cd4_week96 is not None:
        specs.append(EndpointSpec(RAW_CD4_WEEK96, EndpointKind.CONTINUOUS, priority=prio))
    return tuple(specs)


def load_trial_csv(
    path: str | Path,
    mapping: ColumnMapping = DEFAULT_ACTG_MAPPING,
    contrast: str = DEFAULT_CONTRAST,
) -> TrialDataset:
    """Load an ACTG 175-shaped CSV into a raw :class:`TrialDataset`.

    The raw dataset carries the composite event (follow-up days + event
    indicator) plus the week-20 and week-96 CD4 measurements as endpoints,
    and the mapped covariates (arm and baseline CD4 included). Group labels
    come from ``contrast`` applied to the arm column; subjects in arms
    outside a two-arm contrast are dropped.

    Raises FileNotFoundError, SchemaMismatchError, CsvParseError or
    EmptyGroupError.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    con = parse_contrast(contrast)

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaMismatchError(f"{path}: no header row")
        header = set(reader.fieldnames)
        absent = [c for c in mapping.named_columns() if c not in header]
        if absent:
            raise SchemaMismatchError(f"{path}: missing column(s) {absent}")

        ids: list[str] = []
        arms: list[float] = []
        days: list[float] = []
        events: list[bool] = []
        optionals: dict[str, list[float]] = {
            c: [] for c in (mapping.cd4_baseline, mapping.cd4_week20, mapping.cd4_week96)
            if c is not None
        }
        cov_rows: dict[str, list[float]] = {name: [] for name in mapping.covariates}

        for rownum, row in enumerate(reader, start=1):
            ids.append(row[mapping.subject_id].strip())
            arms.append(_req_float(row, mapping.arm, rownum))
            d = _req_float(row, mapping.days, rownum)
            if d < 0:
                raise CsvParseError(rownum, mapping.days, "negative follow-up time")
            days.append(d)
            ev = _req_float(row, mapping.event, rownum)
            if ev not in (0.0, 1.0):
                raise CsvParseError(rownum, mapping.event, "event indicator must be 0/1")
            events.append(bool(ev))
            for col, store in optionals.items():
                store.append(_opt_float(row, col, rownum))
            for name, col in mapping.covariates.items():
                cov_rows[name].append(_opt_float(row, col, rownum))

    if len(set(ids)) != len(ids):
        raise CsvParseError(0, mapping.subject_id, "duplicate subject ids")

    arms_arr = np.asarray(arms)
    kept, group = _apply_contrast(arms_arr, con)
    if kept.size == 0 or group.sum() == 0 or group.sum() == len(group):
        raise EmptyGroupError(
            f"contrast {contrast!r} left an empty group "
            f"(n={kept.size}, treatment={int(group.sum()) if kept.size else 0})"
        )

    specs = _raw_specs(mapping)
    columns: dict[str, tuple[np.ndarray, np.ndarray]] = {
        RAW_EVENT_ENDPOINT: (
            _frozen(np.asarray(days)[kept]),
            _frozen(np.asarray(events)[kept]),
        )
    }
    for spec_name, col in ((RAW_CD4_WEEK20, mapping.cd4_week20), (RAW_CD4_WEEK96, mapping.cd4_week96)):
        if col is not None:
            vals = np.asarray(optionals[col])[kept]
            columns[spec_name] = (_frozen(vals), _frozen(~np.isnan(vals)))

    covariates = {"arm": _frozen(arms_arr[kept])}
    if mapping.cd4_baseline is not None:
        covariates["cd4_baseline"] = _frozen(np.asarray(optionals[mapping.cd4_baseline])[kept])
    for name in mapping.covariates:
        covariates[name] = _frozen(np.asarray(cov_rows[name])[kept])

    return TrialDataset(
        _specs=specs,
        _ids=tuple(ids[i] for i in kept),
        _group=_frozen(group),
        _columns=columns,
        _covariates=covariates,
    )


def _req_float(row: Mapping[str, str], col: str, rownum: int) -> float:
    tok = (row[col] or "").strip()
    if tok in MISSING_TOKENS:
        raise CsvParseError(rownum, col, "required field is missing")
    try:
        return float(tok)
    except ValueError:
        raise CsvParseError(rownum, col, f"not a number: {tok!r}") from None


def _opt_float(row: Mapping[str, str], col: str, rownum: int) -> float:
    tok = (row[col] or "").strip()
    if tok in MISSING_TOKENS:
        return math.nan
    try:
        return float(tok)
    except ValueError:
        raise CsvParseError(rownum, col, f"not a number: {tok!r}") from None


# ---------------------------------------------------------------------------
# Endpoint derivation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DerivationConfig:
    """Options for turning a raw ingest into the analysis endpoint set.

    ``contrast`` regroups subjects from the ``arm`` covariate; the default
    pools the three combination arms against zidovudine monotherapy.
    """

    contrast: str = DEFAULT_CONTRAST
    include_week96: bool = True
    missing_policy: MissingPolicy = MissingPolicy.TIE_AT_LEVEL


def derive_endpoints(raw: TrialDataset, config: DerivationConfig = DerivationConfig()) -> TrialDataset:
    """Produce the analysis endpoints from a raw ingest.

    E1 = composite event (time-to-event, priority 1), E2 = CD4 change at
    ~20 weeks from baseline (priority 2), E3 = CD4 at ~96 weeks (priority 3,
    frequently missing). Already-derived datasets pass through unchanged
    apart from the contrast, so the operation is idempotent per config.
    """
    if not raw.has_endpoint(RAW_EVENT_ENDPOINT):
        raise MissingColumnError(f"dataset lacks endpoint {RAW_EVENT_ENDPOINT!r}")
    if not raw.has_covariate("arm"):
        raise MissingColumnError("dataset lacks the 'arm' covariate needed for contrasts")

    already_derived = raw.has_endpoint(DERIVED_CD4_CHANGE)
    if not already_derived:
        if not raw.has_endpoint(RAW_CD4_WEEK20):
            raise MissingColumnError(f"dataset lacks endpoint {RAW_CD4_WEEK20!r}")
        if not raw.has_covariate("cd4_baseline"):
            raise MissingColumnError("dataset lacks the 'cd4_baseline' covariate")
    if config.include_week96 and not raw.has_endpoint(RAW_CD4_WEEK96):
        raise MissingColumnError(f"dataset lacks endpoint {RAW_CD4_WEEK96!r}")

    con = parse_contrast(config.contrast)
    kept, group = _apply_contrast(raw.covariate("arm"), con)
    if kept.size == 0 or group.sum() == 0 or group.sum() == len(group):
        raise EmptyGroupError(f"contrast {config.contrast!r} left an empty group")

    policy = config.missing_policy
    specs = [
        EndpointSpec(RAW_EVENT_ENDPOINT, EndpointKind.TIME_TO_EVENT, priority=1,
                     missing_policy=policy),
        EndpointSpec(DERIVED_CD4_CHANGE, EndpointKind.CONTINUOUS, priority=2,
                     missing_policy=policy),
    ]
    if config.include_week96:
        specs.append(
            EndpointSpec(RAW_CD4_WEEK96, EndpointKind.CONTINUOUS, priority=3,
                         missing_policy=policy)
        )

    columns: dict[str, tuple[np.ndarray, np.ndarray]] = {
        RAW_EVENT_ENDPOINT: (
            _frozen(raw.times(RAW_EVENT_ENDPOINT)[kept].copy()),
            _frozen(raw.events_observed(RAW_EVENT_ENDPOINT)[kept].copy()),
        )
    }
    if already_derived:
        columns[DERIVED_CD4_CHANGE] = (
            _frozen(raw.values(DERIVED_CD4_CHANGE)[kept].copy()),
            _frozen(raw.present(DERIVED_CD4_CHANGE)[kept].copy()),
        )
    else:
        wk20 = raw.values(RAW_CD4_WEEK20)[kept]
        base = raw.covariate("cd4_baseline")[kept]
        change = wk20 - base
        columns[DERIVED_CD4_CHANGE] = (_frozen(change), _frozen(~np.isnan(change)))
    if config.include_week96:
        vals = raw.values(RAW_CD4_WEEK96)[kept].copy()
        columns[RAW_CD4_WEEK96] = (_frozen(vals), _frozen(~np.isnan(vals)))

    covariates = {k: _frozen(raw.covariate(k)[kept].copy()) for k in raw.covariate_names}

    return TrialDataset(
        _specs=tuple(specs),
        _ids=tuple(raw.ids[i] for i in kept),
        _group=_frozen(group),
        _columns=columns,
        _covariates=covariates,
    )


# ---------------------------------------------------------------------------
# Baseline summary
# ---------------------------------------------------------------------------

RACE_LABELS = {
    0: "race: white non-hispanic",
    1: "race: black non-hispanic",
    2: "race: hispanic",
    3: "race: other",
}


@dataclass(frozen=True)
class SummaryRow:
    label: str
    kind: str  # "count" | "mean"
    values: tuple[float | None, ...]


@dataclass(frozen=True)
class SummaryTable:
    columns: tuple[str, ...]
    rows: tuple[SummaryRow, ...]

    def value(self, label: str, column: str) -> float | None:
        j = self.columns.index(column)
        for row in self.rows:
            if row.label == label:
                return row.values[j]
        raise KeyError(label)

    def to_text(self) -> str:
        width = max(len(r.label) for r in self.rows) + 2
        colw = max(12, max(len(c) for c in self.columns) + 2)
        lines = ["".ljust(width) + "".join(c.rjust(colw) for c in self.columns)]
        for row in self.rows:
            cells = []
            for v in row.values:
                if v is None:
                    cells.append("unavailable".rjust(colw))
                elif row.kind == "count":
                    cells.append(f"{int(v)}".rjust(colw))
                else:
                    cells.append(f"{v:.1f}".rjust(colw))
            lines.append(row.label.ljust(width) + "".join(cells))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        out = ["characteristic," + ",".join(self.columns)]
        for row in self.rows:
            cells = []
            for v in row.values:
                if v is None:
                    cells.append("")
                elif row.kind == "count":
                    cells.append(str(int(v)))
                else:
                    cells.append(repr(float(v)))
            out.append(row.label.replace(",", ";") + "," + ",".join(cells))
        return "\n".join(out) + "\n"


def baseline_summary(ds: TrialDataset) -> SummaryTable:
    """Counts and means of the baseline covariates, stratified by prior
    antiretroviral exposure when that flag is available."""
    masks: list[tuple[str, np.ndarray]] = [("all", np.ones(ds.n, dtype=bool))]
    if ds.has_covariate("prior_art"):
        prior = ds.covariate("prior_art")
        masks.append(("no_prior_exposure", prior == 0))
        masks.append(("prior_exposure", prior == 1))

    def count_of(name: str, predicate) -> list[float | None]:
        if not ds.has_covariate(name):
            return [None] * len(masks)
        col = ds.covariate(name)
        ok = ~np.isnan(col)
        return [float(np.sum(predicate(col) & ok & m)) for _, m in masks]

    def mean_of(name: str) -> list[float | None]:
        if not ds.has_covariate(name):
            return [None] * len(masks)
        col = ds.covariate(name)
        out: list[float | None] = []
        for _, m in masks:
            vals = col[m & ~np.isnan(col)]
            out.append(float(vals.mean()) if vals.size else None)
        return out

    rows = [SummaryRow("n", "count", tuple(float(m.sum()) for _, m in masks))]
    rows.append(SummaryRow("male", "count", tuple(count_of("male", lambda c: c == 1))))
    rows.append(SummaryRow("age (mean)", "mean", tuple(mean_of("age"))))
    if ds.has_covariate("race"):
        race = ds.covariate("race")
        codes = sorted(int(c) for c in np.unique(race[~np.isnan(race)]))
        for code in codes:
            label = RACE_LABELS.get(code, f"race: code {code}")
            rows.append(SummaryRow(label, "count", tuple(count_of("race", lambda c, k=code: c == k))))
    else:
        rows.append(SummaryRow("race: white non-hispanic", "count", (None,) * len(masks)))
    rows.append(SummaryRow("risk: homosexual activity", "count",
                           tuple(count_of("homosexual", lambda c: c == 1))))
    rows.append(SummaryRow("risk: injection-drug use", "count",
                           tuple(count_of("ivdrug", lambda c: c == 1))))
    rows.append(SummaryRow("risk: hemophilia", "count",
                           tuple(count_of("hemophilia", lambda c: c == 1))))
    rows.append(SummaryRow("karnofsky score of 100", "count",
                           tuple(count_of("karnofsky", lambda c: c == 100))))
    rows.append(SummaryRow("symptomatic hiv infection", "count",
                           tuple(count_of("symptomatic", lambda c: c == 1))))
    rows.append(SummaryRow("baseline cd4 (mean)", "mean", tuple(mean_of("cd4_baseline"))))

    return SummaryTable(tuple(name for name, _ in masks), tuple(rows))


# ---------------------------------------------------------------------------
# Generic round-trip CSV (write a dataset, read it back)
# ---------------------------------------------------------------------------


def dataset_to_csv(ds: TrialDataset, path: str | Path) -> None:
    """Write a dataset in the generic column layout understood by
    :func:`dataset_from_csv`: time-to-event endpoints become two columns
    ``<name>_time``/``<name>_event``, others a single value column."""
    header = ["id", "group"]
    for spec in ds.endpoint_specs:
        if spec.kind is EndpointKind.TIME_TO_EVENT:
            header += [f"{spec.name}_time", f"{spec.name}_event"]
        else:
            header.append(spec.name)
    header.extend(ds.covariate_names)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(ds.n):
            row: list[str] = [ds.ids[i], "treatment" if ds.group_codes[i] else "control"]
            for spec in ds.endpoint_specs:
                if spec.kind is EndpointKind.TIME_TO_EVENT:
                    row.append(repr(float(ds.times(spec.name)[i])))
                    row.append("1" if ds.events_observed(spec.name)[i] else "0")
                else:
                    if ds.present(spec.name)[i]:
                        row.append(repr(float(ds.values(spec.name)[i])))
                    else:
                        row.append("")
            for name in ds.covariate_names:
                v = ds.covariate(name)[i]
                row.append("" if math.isnan(v) else repr(float(v)))
            w.writerow(row)


def dataset_from_csv(path: str | Path, specs: Sequence[EndpointSpec]) -> TrialDataset:
    """Reload a dataset written by :func:`dataset_to_csv` (specs supplied by
    the caller; column layout must match)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    specs = tuple(specs)

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaMismatchError(f"{path}: no header row")
        header = list(reader.fieldnames)
        needed = ["id", "group"]
        for spec in specs:
            if spec.kind is EndpointKind.TIME_TO_EVENT:
                needed += [f"{spec.name}_time", f"{spec.name}_event"]
            else:
                needed.append(spec.name)
        absent = [c for c in needed if c not in header]
        if absent:
            raise SchemaMismatchError(f"{path}: missing column(s) {absent}")
        cov_names = [c for c in header if c not in needed]

        subjects = []
        for rownum, row in enumerate(reader, start=1):
            outcomes: dict[str, OutcomeValue] = {}
            for spec in specs:
                if spec.kind is EndpointKind.TIME_TO_EVENT:
                    t = _req_float(row, f"{spec.name}_time", rownum)
                    e = _req_float(row, f"{spec.name}_event", rownum)
                    outcomes[spec.name] = TimeToEventValue(t, bool(e))
                elif spec.kind is EndpointKind.CONTINUOUS:
                    v = _opt_float(row, spec.name, rownum)
                    outcomes[spec.name] = (
                        ContinuousValue(v) if not math.isnan(v) else ContinuousValue.missing()
                    )
                else:
                    v = _opt_float(row, spec.name, rownum)
                    outcomes[spec.name] = (
                        BinaryValue(int(v)) if not math.isnan(v) else BinaryValue.missing()
                    )
            gtok = row["group"].strip().lower()
            if gtok not in ("treatment", "control"):
                raise CsvParseError(rownum, "group", f"unknown group {gtok!r}")
            covs = {}
            for name in cov_names:
                v = _opt_float(row, name, rownum)
                if not math.isnan(v):
                    covs[name] = v
            subjects.append(
                Subject(
                    row["id"],
                    Group.TREATMENT if gtok == "treatment" else Group.CONTROL,
                    outcomes,
                    covs,
                )
            )
    return TrialDataset.from_subjects(subjects, specs)
