"""Strict parsing of JSON config records.

Record shapes (all keys fixed; unknown keys are rejected)::

    distribution  {"family": "uniform", "lo": 0, "hi": 1}
                  {"family": "power", "a": 2.0}
                  {"family": "exponential", "rate": 1.0}
                  {"family": "lognormal", "mu": 0.0, "sigma": 1.0}
                  {"family": "point", "value": 0.5}
    price to beat a distribution record, or
                  {"derived": {"value": <distribution>, "opponents": 1,
                               "slope": 0.8, "intercept": 0.0}}
    rule          {"kappa": 1.0, "reserve": 0.0}
    strategy      {"slope": 3.0, "intercept": 0.0}
    bidder        {"value": <distribution>, "T": 1.0, "strategy": <strategy>}
    market        {"bidders": [<bidder>, ...], "rule": <rule>,
                   "auctions": 1000000, "seed": 0}
    hjb           any subset of the HjbConfig fields

Command-level records are documented in the README.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

from .auction import BidStrategy, PaymentRule
from .distributions import FAMILIES, DerivedPriceToBeat
from .errors import ConfigError
from .hjb import HjbConfig
from .simulator import BidderSpec, MarketConfig

_FAMILY_FIELDS = {
    "uniform": ("lo", "hi"),
    "power": ("a",),
    "exponential": ("rate",),
    "lognormal": ("mu", "sigma"),
    "point": ("value",),
}

HJB_FIELDS = tuple(HjbConfig.__dataclass_fields__)


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}", key=str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def config_hash(record) -> str:
    blob = json.dumps(record, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def check_keys(record, allowed, required=(), where="config"):
    if not isinstance(record, dict):
        raise ConfigError(f"{where}: expected an object, got {type(record).__name__}", key=where)
    for key in record:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r} (allowed: {', '.join(allowed)})",
                              key=key)
    for key in required:
        if key not in record:
            raise ConfigError(f"{where}: missing required key {key!r}", key=key)


def number(record, key, where, default=None, integer=False):
    if key not in record:
        if default is None:
            raise ConfigError(f"{where}: missing required key {key!r}", key=key)
        return default
    val = record[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}: {key!r} must be a number, got {val!r}", key=key)
    if integer:
        if float(val) != int(val):
            raise ConfigError(f"{where}: {key!r} must be an integer, got {val!r}", key=key)
        return int(val)
    if not math.isfinite(val):
        raise ConfigError(f"{where}: {key!r} must be finite", key=key)
    return float(val)


def _rewrap(exc: ConfigError, where: str) -> ConfigError:
    return ConfigError(f"{where}: {exc}", key=exc.key)


def parse_distribution(record, where="value"):
    if not isinstance(record, dict) or "family" not in record:
        raise ConfigError(f"{where}: distribution record needs a 'family' key", key="family")
    family = record["family"]
    if family not in FAMILIES:
        raise ConfigError(f"{where}: unknown family {family!r} (one of {', '.join(FAMILIES)})",
                          key="family")
    fields = _FAMILY_FIELDS[family]
    check_keys(record, ("family",) + fields, ("family",) + fields, where)
    try:
        return FAMILIES[family](**{k: number(record, k, where) for k in fields})
    except ConfigError as exc:
        raise _rewrap(exc, where) from None


def parse_price_to_beat(record, where="price_to_beat"):
    if isinstance(record, dict) and "derived" in record:
        check_keys(record, ("derived",), where=where)
        inner = record["derived"]
        w = f"{where}.derived"
        check_keys(inner, ("value", "opponents", "slope", "intercept"), ("value", "opponents"), w)
        try:
            return DerivedPriceToBeat(parse_distribution(inner["value"], f"{w}.value"),
                                      number(inner, "opponents", w, integer=True),
                                      number(inner, "slope", w, 1.0),
                                      number(inner, "intercept", w, 0.0))
        except ConfigError as exc:
            raise exc if exc.args[0].startswith(w) else _rewrap(exc, w) from None
    return parse_distribution(record, where)


def parse_rule(record, where="rule"):
    record = {} if record is None else record
    check_keys(record, ("kappa", "reserve"), where=where)
    try:
        return PaymentRule(number(record, "kappa", where, 1.0), number(record, "reserve", where, 0.0))
    except ConfigError as exc:
        raise _rewrap(exc, where) from None


def parse_strategy(record, where="strategy"):
    check_keys(record, ("slope", "intercept"), ("slope",), where)
    try:
        return BidStrategy(number(record, "slope", where), number(record, "intercept", where, 0.0))
    except ConfigError as exc:
        raise _rewrap(exc, where) from None


def parse_bidder(record, where="bidder"):
    check_keys(record, ("value", "T", "strategy"), ("value", "T", "strategy"), where)
    try:
        return BidderSpec(parse_distribution(record["value"], f"{where}.value"),
                          number(record, "T", where),
                          parse_strategy(record["strategy"], f"{where}.strategy"))
    except ConfigError as exc:
        raise exc if exc.args[0].startswith(where) else _rewrap(exc, where) from None


def parse_market(record, where="market"):
    check_keys(record, ("bidders", "rule", "auctions", "seed"), ("bidders",), where)
    bidders = record["bidders"]
    if not isinstance(bidders, list) or not bidders:
        raise ConfigError(f"{where}: 'bidders' must be a nonempty list", key="bidders")
    specs = tuple(parse_bidder(b, f"{where}.bidders[{i}]") for i, b in enumerate(bidders))
    return MarketConfig(specs, parse_rule(record.get("rule"), f"{where}.rule"),
                        number(record, "auctions", where, 10**6, integer=True),
                        number(record, "seed", where, 0, integer=True))


def parse_hjb(record, where="hjb"):
    check_keys(record, HJB_FIELDS, where=where)
    kwargs = {}
    for key, val in record.items():
        if key == "noise_on":
            if not isinstance(val, bool):
                raise ConfigError(f"{where}: 'noise_on' must be true or false", key=key)
            kwargs[key] = val
        else:
            integer = key in ("x_steps", "t_steps", "alpha_steps")
            kwargs[key] = number(record, key, where, integer=integer)
    try:
        return HjbConfig(**kwargs)
    except ConfigError as exc:
        raise _rewrap(exc, where) from None


def describe_distribution(dist) -> dict:
    return dist.to_record()


def market_record(config: MarketConfig) -> dict:
    return {
        "bidders": [{"value": b.value_dist.to_record(), "T": b.target_cpa,
                     "strategy": {"slope": b.strategy.slope, "intercept": b.strategy.intercept}}
                    for b in config.bidders],
        "rule": {"kappa": config.rule.kappa, "reserve": config.rule.reserve},
        "auctions": config.auctions,
        "seed": config.seed,
    }


def hjb_record(config: HjbConfig) -> dict:
    return {k: getattr(config, k) for k in HJB_FIELDS}
