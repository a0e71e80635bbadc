"""
Experiment Specs
Typed oracle and attack descriptions loaded from JSON and turned into runnable objects
"""
import json
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, TypeAdapter, model_validator

from src.attacks.boundary import SbbConfig, sbb
from src.attacks.image_processing import IpAttackKind, IpParams, ip_sweep
from src.attacks.local_search import SblsConfig, sbls
from src.attacks.outcome import AttackOutcome, establish_original
from src.attacks.single_pixel import SpConfig, sp_attack
from src.core.image import Image
from src.defenses.filters import FilterKind
from src.defenses.wrappers import Granularity, round_confidence, wrap_with_filter
from src.oracle.detectors import DetectorOracle, MaskCoverageOracle, MeanIntensityOracle
from src.oracle.http_adapter import AdapterConfig, make_http_adapter
from src.oracle.verdict import Verdict
from src.regions.masks import SubjectMask

OracleFactory = Callable[[Image, SubjectMask], DetectorOracle]


class OracleSpec(BaseModel):
    """
    Which detector to query and which defenses sit in front of it.

    Mask-coverage detectors are built per image (the image is the reference);
    the other kinds are built once and shared by the whole batch. The verdict
    cache is applied by the runner, outside the per-image query metering.
    """

    kind: Literal["mask_coverage", "mean_intensity", "http"]
    tau: float = Field(default=0.5, ge=0, le=1)
    adapter: Optional[AdapterConfig] = None
    filter: Optional[FilterKind] = None
    rounding: Optional[Granularity] = None
    budget: Optional[int] = Field(default=None, ge=0)
    cache: bool = False

    @model_validator(mode="after")
    def _adapter_for_http(self) -> "OracleSpec":
        if self.kind == "http" and self.adapter is None:
            raise ValueError("an http oracle needs an adapter config")
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "OracleSpec":
        with open(path, "r") as f:
            return cls.model_validate(json.load(f))

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w") as f:
            f.write(self.model_dump_json(indent=2) + "\n")

    @property
    def per_image(self) -> bool:
        return self.kind == "mask_coverage"

    @property
    def cost_per_1000(self) -> Optional[float]:
        """Per-1000-query fee of a paid detector, if its adapter declares one"""
        return self.adapter.cost_per_1000 if self.adapter is not None else None

    def _decorate(self, oracle: DetectorOracle) -> DetectorOracle:
        if self.filter is not None:
            oracle = wrap_with_filter(oracle, self.filter)
        if self.rounding is not None:
            oracle = round_confidence(oracle, self.rounding)
        return oracle

    def build(self, session: Optional[Any] = None) -> OracleFactory:
        """Factory mapping (image, mask) to the oracle that judges it"""
        if self.per_image:
            return lambda image, mask: self._decorate(MaskCoverageOracle(image, mask, self.tau))

        if self.kind == "mean_intensity":
            shared = self._decorate(MeanIntensityOracle(self.tau))
        else:
            shared = self._decorate(make_http_adapter(self.adapter, session=session))
        return lambda image, mask: shared

    def describe(self) -> Dict[str, Any]:
        record = self.model_dump(mode="json", exclude={"adapter"})
        if self.filter is not None:
            # Fixed window recorded with every report
            record["filter_window"] = "3x3"
        return record


class IpAttackSpec(BaseModel):
    attack: Literal["ip"] = "ip"
    kind: IpAttackKind
    params: IpParams = Field(default_factory=IpParams)
    schedule: Optional[List[Optional[float]]] = None

    def run(self, image: Image, mask: SubjectMask, oracle: DetectorOracle, seed: int,
            original_verdict: Optional[Verdict] = None) -> AttackOutcome:
        original_verdict, spent = establish_original(oracle, image, original_verdict)
        params = self.params.model_copy(update={"seed": seed})
        outcome = ip_sweep(image, oracle, original_verdict, self.kind, self.schedule, params)
        outcome.queries += spent
        return outcome


class SpAttackSpec(BaseModel):
    attack: Literal["sp"] = "sp"
    config: SpConfig = Field(default_factory=SpConfig)

    def run(self, image: Image, mask: SubjectMask, oracle: DetectorOracle, seed: int,
            original_verdict: Optional[Verdict] = None) -> AttackOutcome:
        return sp_attack(image, mask, self.config.region, self.config.perturb, oracle, seed,
                         schedule=self.config.schedule, original_verdict=original_verdict)


class SblsAttackSpec(BaseModel):
    attack: Literal["sbls"] = "sbls"
    config: SblsConfig = Field(default_factory=SblsConfig)

    def run(self, image: Image, mask: SubjectMask, oracle: DetectorOracle, seed: int,
            original_verdict: Optional[Verdict] = None) -> AttackOutcome:
        return sbls(image, mask, oracle, self.config, seed, original_verdict)


class SbbAttackSpec(BaseModel):
    attack: Literal["sbb"] = "sbb"
    config: SbbConfig = Field(default_factory=SbbConfig)

    def run(self, image: Image, mask: SubjectMask, oracle: DetectorOracle, seed: int,
            original_verdict: Optional[Verdict] = None) -> AttackOutcome:
        return sbb(image, mask, oracle, self.config, seed, original_verdict)


AttackSpec = Annotated[
    Union[IpAttackSpec, SpAttackSpec, SblsAttackSpec, SbbAttackSpec],
    Field(discriminator="attack"),
]

_attack_adapter = TypeAdapter(AttackSpec)


def parse_attack_spec(record: Dict[str, Any]) -> AttackSpec:
    return _attack_adapter.validate_python(record)
