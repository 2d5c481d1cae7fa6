# Import libraries
import logging

from mcp.server.fastmcp import FastMCP

import sys
import os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..')))
from common.config import get_settings
from common.errors import LandscapeError
from common.types import CalibrationSummary, InputError, VerifyReport
from services.landscape_service import EnergyLandscapeService

logger = logging.getLogger(__name__)

mcp = FastMCP("Energy Landscape MCP Server")


def _service(potential: dict) -> EnergyLandscapeService:
    return EnergyLandscapeService(potential)


def _guarded(compute) -> dict:
    try:
        return compute()
    except (LandscapeError, ValueError) as e:
        logger.info(f"Tool call rejected: {e}")
        return {"error": InputError(message=str(e)).model_dump()}


@mcp.tool()
def critical_points(potential: dict) -> dict:
    """
    Locate the minima and maxima of a potential over one period.

    Args:
        potential (dict): Potential description ("smooth" trig series or "abstract-extrema" values).

    Returns:
        dict: Minima, maxima (the last maximum is the wrapped first one) and the tilt.
    """
    return _guarded(lambda: _service(potential).critical_points().model_dump(mode="json"))


@mcp.tool()
def barrier_table(potential: dict) -> dict:
    """
    Directional and Peierls barrier tables between the minima.

    Args:
        potential (dict): Potential description.

    Returns:
        dict: hR_tilde, hL_tilde, peierls (k x k) and the critical-point matrix.
    """
    return _guarded(lambda: _service(potential).barrier_table().model_dump(mode="json"))


@mcp.tool()
def boundary_data(potential: dict, boundary: str = "fw") -> dict:
    """
    Boundary values W_i on the minima.

    Args:
        potential (dict): Potential description.
        boundary (str): "fw" for Freidlin-Wentzell values or "zero".

    Returns:
        dict: Values, provenance and, for "fw", the minimizing j of each row.
    """
    return _guarded(lambda: _service(potential).boundary(boundary).model_dump(mode="json"))


@mcp.tool()
def energy_landscape(potential: dict, boundary: str = "fw") -> dict:
    """
    Boundary values and the glued landscape W with its normalization W*.

    Args:
        potential (dict): Potential description.
        boundary (str): "fw" for Freidlin-Wentzell values or "zero".

    Returns:
        dict: The landscape as segments, kinks and boundary data.
    """
    return _guarded(lambda: _service(potential).landscape(boundary).model_dump(mode="json"))


@mcp.tool()
def verify_curve(potential: dict, curve: str = "wstar", anchor: float | None = None) -> dict:
    """
    Viscosity and entropy checks of W* or of a Mañé potential.

    Args:
        potential (dict): Potential description with derivatives available.
        curve (str): "wstar" or "mane".
        anchor (float | None): Anchor of the Mañé potential.

    Returns:
        dict: Per-corner records and the overall verdict.
    """

    def compute() -> dict:
        service = _service(potential)
        if curve == "mane":
            if anchor is None:
                raise ValueError("a Mañé potential needs an anchor")
            target = service.mane(anchor)
        else:
            target = service.landscape().Wstar
        visc, entropy = service.verify(target)
        report = VerifyReport(curve=curve, viscosity=visc, entropy=entropy, passed=visc.passed and entropy.admissible)
        return report.model_dump(mode="json")

    return _guarded(compute)


@mcp.tool()
def calibration(potential: dict, points: list[float]) -> dict:
    """
    Backward characteristics of W through the given points and their action check.

    Args:
        potential (dict): Potential description with derivatives available.
        points (list[float]): Starting points.

    Returns:
        dict: One calibration report per trajectory and the overall verdict.
    """

    def compute() -> dict:
        reports = [report for _, report in _service(potential).calibrate(points)]
        return CalibrationSummary(reports=reports, passed=all(r.passed for r in reports)).model_dump(mode="json")

    return _guarded(compute)


@mcp.tool()
def chain_stationary(potential: dict, eps: float = 0.05) -> dict:
    """
    Stationary distribution of the coarse-grained well chain.

    Args:
        potential (dict): Potential description with at least two wells.
        eps (float): Noise strength.

    Returns:
        dict: Numerical and closed-form vectors and the exponents -eps log nu.
    """

    def compute() -> dict:
        model, stationary = _service(potential).chain(eps)
        return {"model": model.model_dump(mode="json"), "stationary": stationary.model_dump(mode="json")}

    return _guarded(compute)


@mcp.tool()
def ldp_errors(potential: dict, eps: list[float], grid: int = 4096) -> dict:
    """
    Sup-norm distance between W_eps and W* along an epsilon sweep.

    Args:
        potential (dict): Potential description.
        eps (list[float]): Noise strengths, largest first.
        grid (int): Quadrature grid size.

    Returns:
        dict: Error table and whether it decreases.
    """
    return _guarded(lambda: _service(potential).ldp(eps, grid).model_dump(mode="json"))


if __name__ == "__main__":
    logging.basicConfig(level=getattr(logging, get_settings().log_level.upper(), logging.INFO))
    mcp.run(transport='stdio')
