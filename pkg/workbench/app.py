"""
Soliton Workbench - Main Flask Application
JSON API over the polytope, character, soliton and Kempf-Ness services
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from parent directory (project root)
env_path = Path(__file__).parent.parent / '.env'
load_dotenv(dotenv_path=env_path)

from flask import Flask, request, jsonify

# Import services
from services.catalog_service import CatalogService
from services.character_service import CharacterService
from services.errors import ValidationError
from services.kempfness_service import KempfNessService
from services.polytope_service import MomentPolytope, PolytopeService, format_rational
from services.soliton_service import SolitonService, doubling_levels

# Initialize Flask app
app = Flask(__name__)
app.config['WORKBENCH_TOL'] = float(os.getenv('WORKBENCH_TOL', '1e-10'))
app.config['WORKBENCH_M_MAX'] = int(os.getenv('WORKBENCH_M_MAX', '160'))

# Configure logging
logging.basicConfig(
    level=os.getenv('LOG_LEVEL', 'INFO').upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = app.logger

# Development mode
DEBUG = os.environ.get('FLASK_ENV') == 'development'

catalog = CatalogService()


def _request_polytope(data: dict) -> MomentPolytope:
    """Polytope from {"example": name} or an inline {"polytope": {...}}"""
    if data.get('example'):
        return catalog.get_polytope(data['example'])
    if isinstance(data.get('polytope'), dict):
        return PolytopeService.from_dict(data['polytope'])
    raise ValidationError("Provide 'example' or 'polytope'")


def _json_body() -> dict:
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise ValidationError('Request body must be a JSON object')
    return data


def _vector_field(data: dict, key: str, default: list) -> list:
    """Optional list of numbers from the request body"""
    value = data.get(key, default)
    if not isinstance(value, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
        raise ValidationError(f"'{key}' must be a list of numbers")
    return value

# ============================================================================
# API ROUTES - v1 Endpoints
# ============================================================================

@app.route('/api/v1/health', methods=['GET'])
def health_check():
    """Health check endpoint"""
    return jsonify({
        'status': 'healthy',
        'version': 'v1',
        'message': 'Soliton Workbench API'
    }), 200

@app.route('/api/v1/examples', methods=['GET'])
def list_examples():
    """Built-in example polytopes"""
    return jsonify({'examples': catalog.list_examples()}), 200

@app.route('/api/v1/polytope', methods=['POST'])
def polytope():
    """Volume, barycenter and Ehrhart counts of a polytope"""
    try:
        P = _request_polytope(_json_body())
        return jsonify({
            'polytope': P.to_dict(),
            'volume': format_rational(PolytopeService.volume(P)),
            'barycenter': [format_rational(c) for c in PolytopeService.barycenter(P)],
            'ehrhart': PolytopeService.ehrhart_counts(P, P.dim + 3),
            'anticanonical': P.is_anticanonical,
        }), 200

    except ValueError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Polytope error: {e}")
        return jsonify({'error': str(e)}), 500

@app.route('/api/v1/character', methods=['POST'])
def character():
    """Hilbert character at level m"""
    try:
        data = _json_body()
        P = _request_polytope(data)
        chi = CharacterService.hilbert_character(P, int(data.get('m', 1)))
        return jsonify({**chi.to_dict(), 'total': chi.total}), 200

    except ValueError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Character error: {e}")
        return jsonify({'error': str(e)}), 500

@app.route('/api/v1/df', methods=['POST'])
def donaldson_futaki():
    """Continuum DF plus the finite-level convergence table"""
    try:
        data = _json_body()
        P = _request_polytope(data)
        xi = _vector_field(data, 'xi', [0.0] * P.dim)
        lam = _vector_field(data, 'lambda', [1] + [0] * (P.dim - 1))
        m_max = int(data.get('m_max', 40))
        if m_max > app.config['WORKBENCH_M_MAX']:
            raise ValidationError(f"m_max is capped at {app.config['WORKBENCH_M_MAX']}")
        rows = SolitonService.convergence_table(P, xi, lam, doubling_levels(m_max))
        return jsonify({
            'xi': list(xi),
            'lambda': list(lam),
            'df_continuum': SolitonService.df_continuum(P, xi, lam),
            'table': [row.to_dict() for row in rows],
        }), 200

    except ValueError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"DF error: {e}")
        return jsonify({'error': str(e)}), 500

@app.route('/api/v1/xi', methods=['POST'])
def k_optimal_vector():
    """K-optimal vector and the Kahler-Einstein barycenter test"""
    try:
        P = _request_polytope(_json_body())
        report = SolitonService.k_optimal_vector(P, app.config['WORKBENCH_TOL'])
        payload = report.to_dict()
        payload['kahler_einstein'] = SolitonService.is_kahler_einstein(P) if P.is_anticanonical else None
        logger.info(f"K-optimal vector computed in {report.newton_iters} steps")
        return jsonify(payload), 200

    except ValueError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"K-optimal vector error: {e}")
        return jsonify({'error': str(e)}), 500

@app.route('/api/v1/kempf-ness', methods=['POST'])
def kempf_ness():
    """Polystability verdict of a torus representation point"""
    try:
        rp = KempfNessService.from_dict(_json_body())
        verdict = KempfNessService.polystable(rp)
        return jsonify({'representation': rp.to_dict(), **verdict.to_dict()}), 200

    except ValueError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Kempf-Ness error: {e}")
        return jsonify({'error': str(e)}), 500

# ============================================================================
# Error Handlers
# ============================================================================

@app.errorhandler(404)
def not_found(error):
    """Handle 404 errors"""
    return jsonify({'error': 'Endpoint not found'}), 404

@app.errorhandler(405)
def method_not_allowed(error):
    """Handle 405 errors"""
    return jsonify({'error': 'Method not allowed'}), 405

@app.errorhandler(500)
def internal_error(error):
    """Handle 500 errors"""
    logger.error(f'Internal error: {error}')
    return jsonify({'error': 'Internal server error'}), 500

# ============================================================================
# Development Server
# ============================================================================

if __name__ == '__main__':
    port = int(os.environ.get('PORT', 8080))
    logger.info(f'Starting Soliton Workbench on port {port}')
    logger.info(f'Debug mode: {DEBUG}')
    app.run(host='0.0.0.0', port=port, debug=DEBUG)
