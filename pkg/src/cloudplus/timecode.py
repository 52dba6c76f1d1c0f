"""Expiry epochs: encode a key's last valid day as a fixed-width bit string."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import date, datetime, time, timezone

from .errors import DateBeforeGenesis, KeyExpired, LifetimeExceeded


@dataclass(frozen=True)
class EpochConfig:
    """Day-granular epochs counted from ``genesis``; ``lifetime`` is T."""

    genesis: date
    lifetime: int

    def __post_init__(self):
        if self.lifetime < 2:
            raise ValueError("system lifetime must be at least 2 epochs")
        if isinstance(self.genesis, datetime) or not isinstance(self.genesis, date):
            raise TypeError("genesis must be a datetime.date")

    @property
    def width(self) -> int:
        """ceil(log2 T)."""
        return (self.lifetime - 1).bit_length()


@dataclass(frozen=True)
class TimeTag:
    bits: str

    @property
    def epoch(self) -> int:
        return int(self.bits, 2)

    def valid_for(self, cfg: EpochConfig) -> bool:
        return (
            len(self.bits) == cfg.width
            and set(self.bits) <= {"0", "1"}
            and self.epoch < cfg.lifetime
        )


def tag_for_epoch(epoch: int, cfg: EpochConfig) -> TimeTag:
    if not 0 <= epoch < cfg.lifetime:
        raise LifetimeExceeded(f"epoch {epoch} outside system lifetime {cfg.lifetime}")
    return TimeTag(format(epoch, f"0{cfg.width}b"))


def _as_date(d) -> date:
    if isinstance(d, datetime):
        return d.date()
    if isinstance(d, date):
        return d
    if isinstance(d, str):
        return date.fromisoformat(d)
    raise TypeError(f"expected a date, got {type(d).__name__}")


def _as_time(t) -> time:
    if t is None:
        return time(0, 0, 0)
    if isinstance(t, time):
        return t
    if isinstance(t, str):
        return time.fromisoformat(t)
    raise TypeError(f"expected a time of day, got {type(t).__name__}")


def epoch_of(d, t=None, cfg: EpochConfig | None = None) -> int:
    if cfg is None:
        raise TypeError("epoch_of needs an EpochConfig")
    d = _as_date(d)
    _as_time(t)  # validated only; epochs are whole days
    days = (d - cfg.genesis).days
    if days < 0:
        raise DateBeforeGenesis(f"{d.isoformat()} precedes genesis {cfg.genesis.isoformat()}")
    return days


def epoch_at(now: datetime, cfg: EpochConfig) -> int:
    return epoch_of(now.date(), now.time(), cfg)


def time_encode(issue_date, validity: int, cfg: EpochConfig) -> TimeTag:
    if validity < 0:
        raise ValueError("validity must be non-negative")
    expiry = epoch_of(issue_date, None, cfg) + validity
    if expiry >= cfg.lifetime:
        raise LifetimeExceeded(f"expiry epoch {expiry} >= system lifetime {cfg.lifetime}")
    return tag_for_epoch(expiry, cfg)


def time_decode(sk, c_date, c_time, cfg: EpochConfig):
    """Return ``sk`` with its time tag detached, or raise KeyExpired.

    Valid while the current epoch is at or before the tag's expiry epoch.
    """
    now = epoch_of(c_date, c_time, cfg)
    ten = sk.ten
    if ten is None or not ten.valid_for(cfg):
        raise KeyExpired("key carries no usable time tag")
    if now > ten.epoch:
        raise KeyExpired(f"key expired at epoch {ten.epoch}, now epoch {now}")
    return dataclasses.replace(sk, ten=None)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
