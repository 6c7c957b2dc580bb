from flask_sqlalchemy import SQLAlchemy
from datetime import datetime
import json

db = SQLAlchemy()


class RunRecord(db.Model):
    id = db.Column(db.Integer, primary_key=True)
    kind = db.Column(db.String(40), nullable=False)  # 'wln', 'delta', 'concentrate', 'convex_roof', ...
    parameters = db.Column(db.Text, nullable=False)  # JSON
    result = db.Column(db.Text, nullable=False)  # JSON
    converged = db.Column(db.Boolean, default=True)
    version = db.Column(db.String(20))
    created_at = db.Column(db.DateTime, default=datetime.utcnow)

    # Relationships
    gaps = db.relationship('GapRecord', backref='run', lazy=True, cascade='all, delete-orphan')

    @classmethod
    def create(cls, kind, parameters, result, converged=True, version=None):
        return cls(kind=kind, parameters=json.dumps(parameters, sort_keys=True, default=str),
                   result=json.dumps(result, sort_keys=True, default=str),
                   converged=bool(converged), version=version)

    def to_dict(self):
        return {
            'id': self.id,
            'kind': self.kind,
            'parameters': json.loads(self.parameters),
            'result': json.loads(self.result),
            'converged': self.converged,
            'version': self.version,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }


class GapRecord(db.Model):
    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('run_record.id'), nullable=False)
    detector = db.Column(db.String(10), nullable=False)  # 'het' or 'hom'
    local_dim = db.Column(db.Integer, nullable=False)
    trial = db.Column(db.Integer, nullable=False)
    seed = db.Column(db.Integer, default=0)
    delta_gap = db.Column(db.Float, nullable=False)
    delta_state = db.Column(db.Float, nullable=False)
    coverage = db.Column(db.Float, default=1.0)
    digest = db.Column(db.String(32))

    @classmethod
    def from_gap(cls, gap):
        return cls(detector=gap.detector, local_dim=gap.local_dim, trial=gap.trial, seed=gap.seed,
                   delta_gap=gap.delta_gap, delta_state=gap.delta_state, coverage=gap.coverage,
                   digest=gap.digest)


def record_run(kind, parameters, result, converged=True, gaps=(), version=None):
    """Persist one run (and its per-trial gap rows) in the current app context."""
    run = RunRecord.create(kind, parameters, result, converged, version)
    for gap in gaps:
        run.gaps.append(GapRecord.from_gap(gap))
    db.session.add(run)
    db.session.commit()
    return run
