from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import asyncio
import json
import logging
import os
import numpy as np

from inequality_engine.engine_types import EngineSettingsDataType
from inequality_engine.src.certify import Certificate, CertificationResult, build_certificate
from inequality_engine.src.concavity import (
    ConcavityReport,
    E2Report,
    check_concavity,
    check_e2,
    concavity_counterexample,
)
from inequality_engine.src.evidence import Counterexample, make_counterexample, replay
from inequality_engine.src.falsifier import falsify
from inequality_engine.src.problems import (
    GammaReport,
    InequalityProblem,
    PrecheckReport,
    continuity_precheck,
    gamma_density,
)
from utils.errors import InternalInconsistencyError, PreconditionError, UnsupportedError

# Path to the engine defaults
CONFIG_PATH = os.path.join(os.path.dirname(__file__), "config", "settings.json")

engine_settings: EngineSettingsDataType
with open(CONFIG_PATH, 'r') as f:
    engine_settings = json.load(f)

EXIT_CODES = {"holds_certified": 0, "fails": 1, "undecided": 2}


@dataclass(frozen=True)
class Verdict:
    status: str  # holds_certified | fails | undecided
    counterexample: Optional[Counterexample] = None
    certificate: Optional[Certificate] = None
    concavity: Optional[ConcavityReport] = None
    reference: Optional[Counterexample] = None
    agreement: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def evidence_json(self) -> Optional[Dict[str, Any]]:
        if self.status == "fails" and self.counterexample is not None:
            failing: Dict[str, Any] = {"counterexample": self.counterexample.to_json()}
            if self.reference is not None:
                failing["reference_counterexample"] = self.reference.to_json()
            return failing
        evidence: Dict[str, Any] = {}
        if self.certificate is not None:
            evidence["certificate"] = self.certificate.to_json()
        if self.concavity is not None and self.concavity.status == "concave":
            evidence["concavity"] = self.concavity.to_json()
        return evidence or None

    def to_json(self, problem: InequalityProblem) -> Dict[str, Any]:
        return {
            "status": self.status,
            "evidence": self.evidence_json(),
            "agreement": self.agreement,
            "problem": problem.to_json(),
        }


class VerdictManager:
    """Run every evidence channel on a problem and merge them into one Verdict."""
    def __init__(self, settings: Optional[EngineSettingsDataType] = None) -> None:
        self.settings: EngineSettingsDataType = settings if settings is not None else engine_settings
        self.logger = logging.getLogger("VerdictManager")

    def _concavity_channel(self, p: InequalityProblem, seed: int) -> Tuple[ConcavityReport, E2Report, Optional[Counterexample]]:
        rng = np.random.default_rng(seed)
        report = check_concavity(p, self.settings, rng)
        e2 = check_e2(p, report, rng, self.settings["sample_size"], self.settings["concavity_tolerance"])
        counterexample = None
        if report.status == "not_concave":
            counterexample = concavity_counterexample(p, report)
        self.logger.info(f"Concavity channel: {report.status}, e2 {e2.status}")
        return report, e2, counterexample

    async def _certificate_channel(self, p: InequalityProblem, gamma: GammaReport, seed: int) -> Optional[CertificationResult]:
        if not gamma.dense:
            self.logger.warning(f"Skipping certification: {gamma.reason}")
            return None
        try:
            return await build_certificate(p, self.settings, seed=seed)
        except (PreconditionError, UnsupportedError) as e:
            self.logger.warning(f"Certification skipped: {e}")
            return None

    def _verified(self, p: InequalityProblem, candidates: List[Optional[Counterexample]]) -> List[Counterexample]:
        verified = []
        for candidate in candidates:
            if candidate is None:
                continue
            replayed = replay(p, candidate)
            if replayed.violation > self.settings["violation_tolerance"]:
                verified.append(replayed)
            else:
                self.logger.warning(f"Dropping {candidate.source} counterexample that does not replay "
                                    f"(violation {replayed.violation:.3e})")
        return verified

    def _reference(self, p: InequalityProblem) -> Optional[Counterexample]:
        """The problem's own point family, evaluated with equal weights."""
        if not p.reference_points:
            return None
        n = len(p.reference_points)
        reference = make_counterexample(p, p.reference_points, [1.0 / n] * n, source="reference")
        self.logger.info(f"Reference points give lhs - rhs = {reference.violation:.6g}")
        return reference

    async def decide(self, p: InequalityProblem, seed: Optional[int] = None) -> Verdict:
        """Prechecks, concavity + e2, LP certification and falsification, cross-checked."""
        seed = self.settings["seed"] if seed is None else seed
        self.logger.info(f"Deciding '{p.name or 'problem'}' (k={p.k}, seed={seed})")
        precheck: PrecheckReport = continuity_precheck(p)
        gamma = gamma_density(p)
        if precheck.must_fail:
            self.logger.info(f"Continuity precheck: {precheck.reason}")

        concavity_result, certification, found = await asyncio.gather(
            asyncio.to_thread(self._concavity_channel, p, seed),
            self._certificate_channel(p, gamma, seed + 1),
            falsify(p, self.settings, seed=seed + 2, precheck=precheck),
        )
        concavity, e2, concavity_found = concavity_result
        reference = self._reference(p)

        # With φ ≠ Φ a non-concave Ψ says nothing: a different concave majorant may exist.
        decisive_concavity = p.same_couplers and p.f0.is_continuous
        counterexamples = self._verified(p, [found, certification.counterexample if certification else None,
                                             concavity_found, reference])
        certified = certification is not None and certification.status == "certified"
        concave_ok = (concavity.status == "concave" and e2.status == "ok" and gamma.dense
                      and e2.e1_error <= self.settings["e1_tolerance"])

        agreement: Dict[str, Dict[str, Any]] = {
            "precheck": precheck.to_json(),
            "gamma": gamma.to_json(),
            "concavity": dict(concavity.to_json(), decisive=decisive_concavity or concavity.status == "concave"),
            "e2": e2.to_json(),
            "certificate": {"status": certification.status} if certification else {"status": "skipped"},
            "falsifier": ({"status": "found", "violation": found.violation} if found else {"status": "silent"}),
        }
        if certification and certification.certificate:
            agreement["certificate"]["residual"] = certification.certificate.residual
            agreement["certificate"]["rounds"] = certification.certificate.rounds
        if reference is not None:
            violated = reference.violation > self.settings["violation_tolerance"]
            agreement["reference"] = {"status": "violated" if violated else "holds", "violation": reference.violation}

        if counterexamples and (certified or concave_ok):
            sources = sorted({c.source for c in counterexamples})
            raise InternalInconsistencyError(
                f"Verified counterexample from {sources} contradicts "
                f"{'an LP certificate' if certified else 'a concave Psi with e2'}")
        if precheck.must_fail and (certified or concave_ok):
            raise InternalInconsistencyError(f"Continuity precheck says the inequality must fail ({precheck.reason}) "
                                             f"but it was certified")

        if counterexamples:
            agreement["agreed"] = {"status": "agreed"}
            best = max(counterexamples, key=lambda counterexample: counterexample.violation)
            self.logger.info(f"Verdict fails, violation {best.violation:.6g} from the {best.source}")
            replayed_reference = next((c for c in counterexamples if c.source == "reference"), None)
            return Verdict("fails", counterexample=best, concavity=concavity, reference=replayed_reference,
                           agreement=agreement)

        if certified or concave_ok:
            disagreed = decisive_concavity and concavity.status == "not_concave"
            agreement["agreed"] = {"status": "disagreed" if disagreed else "agreed"}
            self.logger.info(f"Verdict holds_certified (certificate: {certified}, concavity: {concave_ok})")
            return Verdict("holds_certified", certificate=certification.certificate if certified else None,
                           concavity=concavity, agreement=agreement)

        if precheck.must_fail:
            self.logger.warning("Precheck says the inequality must fail, but no counterexample was found")
        self.logger.info("Verdict undecided")
        agreement["agreed"] = {"status": "agreed"}
        return Verdict("undecided", concavity=concavity, agreement=agreement)
