from flask import Flask, request, jsonify
import logging
import os

from config import (DATABASE_URI_ENV, DEFAULT_DATABASE_URI, DEFAULT_TOLERANCES, VERSION,
                    configure_logging)
from database import db, RunRecord, record_run
from errors import InvalidArgumentError, NonGaussianityError
import cli
import property_checks
import protocols
import state_factory

logger = logging.getLogger(__name__)

MAX_API_TRIALS = 200


def create_app(overrides=None):
    app = Flask(__name__)
    app.config['SQLALCHEMY_DATABASE_URI'] = os.environ.get(DATABASE_URI_ENV, DEFAULT_DATABASE_URI)
    app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
    app.config.update(overrides or {})

    # Initialize extensions
    db.init_app(app)
    with app.app_context():
        db.create_all()

    register_routes(app)
    return app


def _tolerances(data):
    return DEFAULT_TOLERANCES.override(integration_tol=data.get('tol'))


def _fail(e, status=400):
    logger.warning("request failed: %s", e)
    return jsonify({'success': False, 'error': str(e)}), status


def register_routes(app):

    @app.route('/api/health')
    def health():
        return jsonify({'success': True, 'version': VERSION})

    @app.route('/api/wln', methods=['POST'])
    def compute_wln():
        try:
            data = request.get_json(force=True) or {}
            if 'state' not in data:
                raise InvalidArgumentError("request needs a 'state' field")
            payload = cli.wln_summary(data['state'], data.get('dim'), _tolerances(data))
            run = record_run('wln', data, payload, True, version=VERSION)
            return jsonify({'success': True, 'run_id': run.id, **payload})
        except NonGaussianityError as e:
            return _fail(e)

    @app.route('/api/delta', methods=['POST'])
    def compute_delta():
        try:
            data = request.get_json(force=True) or {}
            if 'state' not in data:
                raise InvalidArgumentError("request needs a 'state' field")
            payload = cli.delta_summary(data['state'], data.get('dim'), _tolerances(data))
            run = record_run('delta', data, payload, True, version=VERSION)
            return jsonify({'success': True, 'run_id': run.id, **payload})
        except NonGaussianityError as e:
            return _fail(e)

    @app.route('/api/concentrate', methods=['POST'])
    def compute_concentration():
        try:
            data = request.get_json(force=True) or {}
            tol = _tolerances(data)
            state = state_factory.build_text(data.get('input', 'fock:1'), data.get('dim'), tol)
            window = protocols.make_window(data.get('detector', 'het'), float(data.get('c', 0.5)),
                                           float(data.get('center', 0.0)), bool(data.get('mirrored', False)))
            result = protocols.concentrate(state, float(data.get('T', 0.5)), window, tol)
            payload = {**result.row(float(data.get('c', 0.5))), 'wln_in': result.wln_in, 'window': result.window}
            run = record_run('concentrate', data, payload, True, version=VERSION)
            return jsonify({'success': True, 'run_id': run.id, **payload})
        except (NonGaussianityError, ValueError) as e:
            return _fail(e)

    @app.route('/api/convex_roof', methods=['POST'])
    def compute_convex_roof():
        try:
            data = request.get_json(force=True) or {}
            trials = int(data.get('trials', 10))
            if trials > MAX_API_TRIALS:
                raise InvalidArgumentError(f"at most {MAX_API_TRIALS} trials per request")
            seed = int(data.get('seed', 0))
            records = property_checks.convex_roof_check([int(data.get('N', 2))], trials, seed,
                                                        tol=_tolerances(data))
            worst = min(r.delta_gap for r in records)
            summary = property_checks.summarize_gaps(records)
            passed = worst >= cli.CONVEX_ROOF_FLOOR
            run = record_run('convex_roof', data, {'summary': summary, 'min_gap': worst}, passed,
                             gaps=records, version=VERSION)
            per_detector = {}
            for entry in summary.values():
                per_detector[f"min_{entry['detector']}"] = entry['min']
                per_detector[f"mean_{entry['detector']}"] = entry['mean']
            return jsonify({'success': True, 'run_id': run.id, 'summary': summary,
                            'min_gap': worst, 'passed': passed, **per_detector})
        except (NonGaussianityError, ValueError) as e:
            return _fail(e)

    @app.route('/api/runs')
    def list_runs():
        raw = request.args.get('limit', '50')
        try:
            limit = int(raw)
        except ValueError:
            return _fail(InvalidArgumentError(f"limit must be a positive integer, got {raw!r}"))
        if limit < 1:
            return _fail(InvalidArgumentError(f"limit must be a positive integer, got {raw!r}"))
        kind = request.args.get('kind')
        query = RunRecord.query
        if kind:
            query = query.filter_by(kind=kind)
        runs = query.order_by(RunRecord.created_at.desc()).limit(limit).all()
        return jsonify({'success': True, 'runs': [r.to_dict() for r in runs]})

    @app.route('/api/runs/<int:run_id>')
    def get_run(run_id):
        run = db.session.get(RunRecord, run_id)
        if run is None:
            return jsonify({'success': False, 'error': f'run {run_id} not found'}), 404
        payload = run.to_dict()
        payload['gaps'] = [{'detector': g.detector, 'N': g.local_dim, 'trial': g.trial,
                            'delta_gap': g.delta_gap, 'digest': g.digest} for g in run.gaps]
        return jsonify({'success': True, 'run': payload})


if __name__ == '__main__':
    configure_logging()
    app = create_app()
    app.run(debug=True, host='127.0.0.1', port=5000)
