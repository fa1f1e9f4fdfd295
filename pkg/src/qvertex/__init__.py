"""qvertex: exact q-vertex-operator calculus on the level-1 Fock space.

Frenkel-Jing and Koyama operators over Q(q^(1/2)), normal-ordered products
with derived contraction prefactors, zeroth/bullet products, bases of the
spaces <Y_i(z)>, the algebra U_q(sl_{n+1})_z and its modules L(lambda_i)_z,
with the basis-compatible isomorphism between the two sides checked at desk
scale.
"""

from .scalarfield import (
    FactoredPrefactor,
    FractionalQPower,
    NoMatch,
    PoleAtOne,
    QScalar,
    limit_q1,
    q_json,
    q_text,
    qbinom,
    qint,
    qpow,
    recognize_product,
)
from .lattice import LatticeVector, alpha, fundamental, group_mul, pairing, to_gen_coords
from .heisenberg import Mode, astar_coeff, bracket, fock_apply, plain, starred
from .voperator import (
    ContractionUnrecognized,
    NonIntegralSignExponent,
    OperatorSum,
    VOTerm,
    compose,
    identity_term,
    make_fj,
    make_koyama,
    verify_relations,
)
from .products import (
    HigherOrderPole,
    NegativeR,
    ShiftCandidate,
    bullet,
    bullet_chain,
    candidate_shifts,
    rth_product,
    zeroth_at,
)
from .repmod import (
    BasisElementB,
    CElement,
    FDModule,
    OracleMismatch,
    StructureMismatch,
    build_Lz_basis,
    build_omega,
    build_uqz,
    enumerate_basis,
    fd_module,
    nonzero_fpath,
)

__version__ = "0.1.0"
