"""
Flask JSON API for singular-quad.
Exposes the integrate, weights, stability, solve and converge operations over HTTP.
"""

import os
import logging
from datetime import datetime
from pathlib import Path

from flask import Flask, request, jsonify
from flask_cors import CORS
from dotenv import load_dotenv

from errors import InvalidArgumentError, QuadratureError
from harness import ExperimentSpec, check_experiment, load_spec, run_experiment
from kernel import make_kernel
from mesh import uniform_mesh
from quadrature import integrate
from stability import negative_sum_min, scheme_stability_polynomial, schur_test, weight_positivity_audit
from stencil import SchemeOrder
from volterra import example_problem, step_solve
from weights import consistency_report, weight_table

# Load environment variables
load_dotenv('.env_quadrature')

logger = logging.getLogger(__name__)

EXPERIMENTS_DIR = Path(__file__).resolve().parent / 'experiments'
MAX_API_N = int(os.getenv('QUAD_API_MAX_N', 2560))

app = Flask(__name__)
CORS(app)


def _payload() -> dict:
    data = request.get_json(silent=True)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidArgumentError('Request body must be a JSON object')
    return data


def _mesh(data: dict):
    N = int(data.get('N', 160))
    if N > MAX_API_N:
        raise InvalidArgumentError(f"N={N} exceeds the API limit of {MAX_API_N}")
    return uniform_mesh(float(data.get('T', 1.0)), N)


@app.route('/api/integrate', methods=['POST'])
def integrate_endpoint():
    """Running convolution integral of a named integrand."""
    data = _payload()
    alpha = data.get('alpha', 0.5)
    K = make_kernel(data.get('kernel', 'power-singular'), alpha)
    order = SchemeOrder.parse(data.get('order', 3), alpha=alpha)
    result = integrate(K, order, _mesh(data), data.get('f', 't3'), alpha)
    result['success'] = True
    return jsonify(result)


@app.route('/api/weights', methods=['POST'])
def weights_endpoint():
    data = _payload()
    alpha = data.get('alpha', 0.5)
    K = make_kernel(data.get('kernel', 'power-singular'), alpha)
    order = SchemeOrder.parse(data.get('order', 3), alpha=alpha)
    table = weight_table(_mesh(data), K, order, data.get('n'))

    response = {
        'n': table.n,
        'order': order.label,
        'w_tilde': table.collapsed.tolist(),
        'consistency': consistency_report(table).to_dict(),
        'success': True,
    }
    if data.get('raw'):
        response['raw'] = table.raw.tolist()
    return jsonify(response)


@app.route('/api/stability', methods=['POST'])
def stability_endpoint():
    """Coefficient-sum margin for one order, plus weight audit and Schur test when a mesh is given."""
    data = _payload()
    gamma = int(data.get('order', 4))
    response = {'success': True}
    if gamma >= 3:
        response['margin'] = negative_sum_min(gamma).to_dict()

    if 'N' in data:
        alpha = data.get('alpha', 0.5)
        K = make_kernel(data.get('kernel', 'power-singular'), alpha)
        mesh = _mesh(data)
        order = SchemeOrder.integer(gamma, allow_unstable=True)
        response['audit'] = weight_positivity_audit(mesh, K, order).to_dict()
        if 'lam' in data:
            poly = scheme_stability_polynomial(mesh, K, order, float(data["lam"]))
            response['schur'] = schur_test(poly).to_dict()
    return jsonify(response)


@app.route('/api/solve', methods=['POST'])
def solve_endpoint():
    """Volterra equation of the second kind for examples 1, 2 or a custom kernel."""
    data = _payload()
    alpha = data.get('alpha', 0.5)
    order = SchemeOrder.parse(data.get('order', 3), alpha=alpha)
    mesh = _mesh(data)
    problem = example_problem(
        data.get('example', 1), alpha, order, mesh.N, mesh.T,
        kernel=data.get('kernel'), exact_power=data.get('exact_power'),
    )
    response = step_solve(problem).to_dict()
    response['success'] = True
    return jsonify(response)


@app.route('/api/converge', methods=['POST'])
def converge_endpoint():
    """
    Convergence study for a stored experiment (by name) or an inline experiment object.
    Long experiments only run with "long": true.
    """
    data = _payload()
    if 'spec' in data:
        spec = ExperimentSpec.from_dict(data['spec'])
    elif 'experiment' in data:
        name = Path(str(data['experiment'])).stem
        spec = load_spec(EXPERIMENTS_DIR / f"{name}.json")
    else:
        raise InvalidArgumentError("Provide 'experiment' or 'spec'")

    if 'ladder' in data:
        spec.ladder = [int(N) for N in data['ladder']]
    if max(spec.ladder) > MAX_API_N and not data.get('long'):
        raise InvalidArgumentError(f"Ladder exceeds N={MAX_API_N}; pass long=true to run it")

    reports = run_experiment(spec, long=bool(data.get('long')), progress=False)
    mismatches = check_experiment(spec, reports)
    return jsonify({
        'experiment': spec.name,
        'reports': [r.to_dict() for r in reports],
        'mismatches': mismatches,
        'reference_only': spec.reference_only,
        'success': True,
    })


@app.route('/health')
def health_check():
    """Health check endpoint."""
    return jsonify({
        'status': 'healthy',
        'timestamp': datetime.now().isoformat(),
        'experiments': sorted(p.stem for p in EXPERIMENTS_DIR.glob('*.json')),
        'version': '1.0.0',
    })


@app.errorhandler(QuadratureError)
def quadrature_error(error):
    logger.warning(f"❌ Rejected request to {request.path}: {error}")
    return jsonify({
        'error': str(error),
        'type': type(error).__name__,
        'success': False
    }), 400


@app.errorhandler(FileNotFoundError)
def missing_file(error):
    return jsonify({
        'error': str(error),
        'success': False
    }), 404


@app.errorhandler(404)
def not_found(error):
    """Handle 404 errors."""
    return jsonify({
        'error': 'Endpoint not found',
        'success': False
    }), 404


@app.errorhandler(500)
def internal_error(error):
    """Handle 500 errors."""
    logger.error(f"Internal server error: {str(error)}")
    return jsonify({
        'error': 'Internal server error',
        'success': False
    }), 500


if __name__ == '__main__':
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    logger.info("Starting singular-quad API...")

    port = int(os.getenv('FLASK_PORT', 5000))
    debug = os.getenv('FLASK_DEBUG', 'False').lower() == 'true'

    app.run(
        host='0.0.0.0',
        port=port,
        debug=debug
    )
