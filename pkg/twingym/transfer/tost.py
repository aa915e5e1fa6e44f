'''Welch two one-sided tests (TOST) for equivalence of two means within a
margin ``delta``.

The t distribution is evaluated through the regularized incomplete beta
function (:func:`scipy.special.betainc`); critical values come from
:func:`scipy.special.stdtrit`.
'''

from dataclasses import asdict, dataclass
import logging
import math

import numpy as np
from scipy.special import betainc, stdtrit

from twingym.core.env import ConfigurationError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TostConfig:
    '''Equivalence margin (return units) and significance level.'''
    margin_delta: float
    alpha: float = 0.05

    def __post_init__(self):
        if not self.margin_delta > 0 or not math.isfinite(self.margin_delta):
            raise ConfigurationError('TOST margin must be positive, got %r' % self.margin_delta)
        if not 0 < self.alpha < 0.5:
            raise ConfigurationError('alpha must be in (0, 0.5), got %r' % self.alpha)


@dataclass
class TostResult:
    mean_a: float
    mean_b: float
    std_a: float
    std_b: float
    n_a: int
    n_b: int
    t_lower: float
    t_upper: float
    df: float
    p_lower: float
    p_upper: float
    equivalent: bool
    #: zero standard error; decided by the mean difference alone
    degenerate: bool = False
    t_crit: float = None
    margin_delta: float = None
    alpha: float = None

    @property
    def difference(self):
        return self.mean_a - self.mean_b

    def to_dict(self):
        return dict(asdict(self), difference=self.difference)


def t_tail(t, df):
    '''``P(T_df >= |t|)``.'''
    x = df / (df + t * t)
    return 0.5 * betainc(0.5 * df, 0.5, x)


def t_cdf(t, df):
    '''``P(T_df <= t)``.'''
    tail = t_tail(t, df)
    return 1.0 - tail if t > 0 else tail


def t_sf(t, df):
    '''``P(T_df >= t)``.'''
    tail = t_tail(t, df)
    return tail if t > 0 else 1.0 - tail


def t_crit(alpha, df):
    '''One-sided critical value ``t_{1-alpha, df}``.'''
    return float(stdtrit(df, 1.0 - alpha))


def welch_df(var_a, n_a, var_b, n_b):
    '''Welch-Satterthwaite degrees of freedom.'''
    se_a, se_b = var_a / n_a, var_b / n_b
    return (se_a + se_b) ** 2 / (se_a ** 2 / (n_a - 1) + se_b ** 2 / (n_b - 1))


def _check_samples(name, samples):
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if len(samples) < 2:
        raise ConfigurationError('%s needs at least 2 values, got %d' % (name, len(samples)))
    if not np.isfinite(samples).all():
        raise ConfigurationError('%s contains non-finite values' % name)
    return samples


def tost_equivalence(samples_a, samples_b, config):
    '''Test whether ``mean(a) - mean(b)`` lies within ``(-delta, +delta)``.

    Test 1 rejects ``mu_a - mu_b <= -delta`` when ``p_lower = P(T >= t_lower)``
    is below alpha; test 2 rejects ``mu_a - mu_b >= +delta`` when
    ``p_upper = P(T <= t_upper)`` is.  Equivalent iff both reject.  With zero
    standard error the verdict is ``-delta < d < delta`` and the result is
    flagged ``degenerate``.

    :raises ConfigurationError: fewer than 2 values, non-finite values
    '''
    a = _check_samples('samples_a', samples_a)
    b = _check_samples('samples_b', samples_b)
    delta, alpha = float(config.margin_delta), float(config.alpha)
    n_a, n_b = len(a), len(b)
    mean_a, mean_b = float(np.mean(a)), float(np.mean(b))
    var_a, var_b = float(np.var(a, ddof=1)), float(np.var(b, ddof=1))
    d = mean_a - mean_b
    se = math.sqrt(var_a / n_a + var_b / n_b)
    common = dict(mean_a=mean_a, mean_b=mean_b, std_a=math.sqrt(var_a),
                  std_b=math.sqrt(var_b), n_a=n_a, n_b=n_b, margin_delta=delta,
                  alpha=alpha)

    if se == 0:
        df = float(n_a + n_b - 2)
        p_lower = 0.0 if d > -delta else 1.0
        p_upper = 0.0 if d < delta else 1.0
        result = TostResult(t_lower=None, t_upper=None, df=df, p_lower=p_lower,
                            p_upper=p_upper, equivalent=p_lower < alpha and p_upper < alpha,
                            degenerate=True, t_crit=t_crit(alpha, df), **common)
    else:
        df = welch_df(var_a, n_a, var_b, n_b)
        t_lower = (d + delta) / se
        t_upper = (d - delta) / se
        p_lower = float(t_sf(t_lower, df))
        p_upper = float(t_cdf(t_upper, df))
        result = TostResult(t_lower=t_lower, t_upper=t_upper, df=df, p_lower=p_lower,
                            p_upper=p_upper, equivalent=p_lower < alpha and p_upper < alpha,
                            t_crit=t_crit(alpha, df), **common)
    logger.debug('TOST d=%.4g delta=%.4g df=%.2f p=(%.3g, %.3g) equivalent=%s',
                 d, delta, result.df, result.p_lower, result.p_upper, result.equivalent)
    return result
