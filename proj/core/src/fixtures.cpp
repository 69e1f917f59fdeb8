#include "stanloop/proposer.hpp"

#include "stanloop/errors.hpp"

namespace stanloop::proposer {

namespace {

const char* kRegressionData = R"(data {
  int<lower=0> N_train;
  int<lower=0> N_test;
  vector[N_train] predictor_train;
  vector[N_test] predictor_test;
  vector[N_train] response_train;
  vector[N_test] response_test;
}
)";

std::string regression_baseline() {
    return std::string(kRegressionData) + R"(parameters {
  real alpha;
  real beta;
  real<lower=0> sigma;
}
model {
  alpha ~ normal(0, 10);
  beta ~ normal(0, 10);
  sigma ~ normal(0, 10);
  response_train ~ normal(alpha + beta * predictor_train, sigma);
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test)
    log_lik[n] = normal_lpdf(response_test[n] | alpha + beta * predictor_test[n], sigma);
}
)";
}

std::string regression_cubic_student_t() {
    return std::string(kRegressionData) + R"(parameters {
  real b0;
  real b1;
  real b2;
  real b3;
  real<lower=1> nu;
  real<lower=0> sigma;
}
model {
  b0 ~ normal(0, 5);
  b1 ~ normal(0, 5);
  b2 ~ normal(0, 2);
  b3 ~ normal(0, 1);
  nu ~ gamma(2, 0.1);
  sigma ~ normal(0, 5);
  {
    vector[N_train] mu = b0 + b1 * predictor_train
        + b2 * square(predictor_train)
        + b3 * predictor_train .* square(predictor_train);
    response_train ~ student_t(nu, mu, sigma);
  }
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test) {
    real x = predictor_test[n];
    real mu = b0 + b1 * x + b2 * square(x) + b3 * x * square(x);
    log_lik[n] = student_t_lpdf(response_test[n] | nu, mu, sigma);
  }
}
)";
}

std::string regression_sine_student_t() {
    return std::string(kRegressionData) + R"(parameters {
  real a;
  real b;
  real c;
  real<lower=0> omega;
  real<lower=1> nu;
  real<lower=0> sigma;
}
model {
  a ~ normal(0, 5);
  b ~ normal(0, 5);
  c ~ normal(0, 2);
  omega ~ normal(1, 0.5);
  nu ~ gamma(2, 0.1);
  sigma ~ normal(0, 5);
  {
    vector[N_train] mu = a * sin(omega * predictor_train)
        + b * cos(omega * predictor_train) + c * predictor_train;
    response_train ~ student_t(nu, mu, sigma);
  }
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test) {
    real x = predictor_test[n];
    real mu = a * sin(omega * x) + b * cos(omega * x) + c * x;
    log_lik[n] = student_t_lpdf(response_test[n] | nu, mu, sigma);
  }
}
)";
}

std::string regression_sine_logsigma_quad() {
    return std::string(kRegressionData) + R"(parameters {
  real a;
  real b;
  real c;
  real<lower=0> omega;
  real<lower=1> nu;
  real s0;
  real s1;
  real s2;
}
model {
  a ~ normal(0, 5);
  b ~ normal(0, 5);
  c ~ normal(0, 2);
  omega ~ normal(1, 0.5);
  nu ~ gamma(2, 0.1);
  s0 ~ normal(0, 2);
  s1 ~ normal(0, 1);
  s2 ~ normal(0, 0.5);
  for (i in 1:N_train) {
    real x = predictor_train[i];
    real mu = a * sin(omega * x) + b * cos(omega * x) + c * x;
    real sig = exp(s0 + s1 * x + s2 * square(x));
    response_train[i] ~ student_t(nu, mu, sig);
  }
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test) {
    real x = predictor_test[n];
    real mu = a * sin(omega * x) + b * cos(omega * x) + c * x;
    real sig = exp(s0 + s1 * x + s2 * square(x));
    log_lik[n] = student_t_lpdf(response_test[n] | nu, mu, sig);
  }
}
)";
}

// two-component contamination: (1-pi) N(mu(x), sigma(x)) + pi N(mu(x), 10)
std::string mixture_fixed_sigma_out(bool cubic_logsigma) {
    std::string logsigma_params = R"(  real s0;
  real s1;
  real s2;
)";
    std::string sig_expr = "exp(s0 + s1 * x + s2 * square(x))";
    if (cubic_logsigma) {
        logsigma_params += "  real s3;\n";
        sig_expr = "exp(s0 + s1 * x + s2 * square(x) + s3 * x * square(x))";
    }
    std::string s = std::string(kRegressionData) + R"(parameters {
  real a;
  real b;
  real c;
  real<lower=0> omega;
  real<lower=0, upper=0.5> pi_out;
)" + logsigma_params + R"(}
model {
  a ~ normal(0, 5);
  b ~ normal(0, 5);
  c ~ normal(0, 2);
  omega ~ normal(1, 0.5);
  pi_out ~ beta(2, 20);
  s0 ~ normal(0, 2);
  s1 ~ normal(0, 1);
  s2 ~ normal(0, 0.5);
)";
    if (cubic_logsigma) s += "  s3 ~ normal(0, 0.25);\n";
    s += R"(  for (i in 1:N_train) {
    real x = predictor_train[i];
    real mu = a * sin(omega * x) + b * cos(omega * x) + c * x;
    real sig = )" + sig_expr + R"(;
    target += log_mix(pi_out,
                      normal_lpdf(response_train[i] | mu, 10),
                      normal_lpdf(response_train[i] | mu, sig));
  }
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test) {
    real x = predictor_test[n];
    real mu = a * sin(omega * x) + b * cos(omega * x) + c * x;
    real sig = )" + sig_expr + R"(;
    log_lik[n] = log_mix(pi_out,
                         normal_lpdf(response_test[n] | mu, 10),
                         normal_lpdf(response_test[n] | mu, sig));
  }
}
)";
    return s;
}

const char* kGroupedData = R"(data {
  int<lower=0> N_train;
  int<lower=0> N_test;
  int<lower=1> J;
  array[N_train] int<lower=1, upper=J> unit_train;
  array[N_test] int<lower=1, upper=J> unit_test;
  vector[N_train] effect_train;
  vector[N_test] effect_test;
}
)";

std::string hierarchical_centered() {
    return std::string(kGroupedData) + R"(parameters {
  real mu;
  real<lower=0> tau;
  vector[J] theta;
  real<lower=0> sigma;
}
model {
  mu ~ normal(0, 5);
  tau ~ normal(0, 5);
  sigma ~ normal(0, 5);
  theta ~ normal(mu, tau);
  effect_train ~ normal(theta[unit_train], sigma);
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test)
    log_lik[n] = normal_lpdf(effect_test[n] | theta[unit_test[n]], sigma);
}
)";
}

std::string hierarchical_noncentered() {
    return std::string(kGroupedData) + R"(parameters {
  real mu;
  real<lower=0> tau;
  vector[J] theta_raw;
  real<lower=0> sigma;
}
transformed parameters {
  vector[J] theta = mu + tau * theta_raw;
}
model {
  mu ~ normal(0, 5);
  tau ~ normal(0, 5);
  sigma ~ normal(0, 5);
  theta_raw ~ std_normal();
  effect_train ~ normal(theta[unit_train], sigma);
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test)
    log_lik[n] = normal_lpdf(effect_test[n] | theta[unit_test[n]], sigma);
}
)";
}

const char* kSlopesData = R"(data {
  int<lower=0> N_train;
  int<lower=0> N_test;
  int<lower=1> J;
  array[N_train] int<lower=1, upper=J> unit_train;
  array[N_test] int<lower=1, upper=J> unit_test;
  vector[N_train] input_train;
  vector[N_test] input_test;
  vector[N_train] effect_train;
  vector[N_test] effect_test;
}
)";

std::string slopes_pooled() {
    return std::string(kSlopesData) + R"(parameters {
  real alpha;
  real beta;
  real<lower=0> sigma;
}
model {
  alpha ~ normal(0, 5);
  beta ~ normal(0, 5);
  sigma ~ normal(0, 5);
  effect_train ~ normal(alpha + beta * input_train, sigma);
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test)
    log_lik[n] = normal_lpdf(effect_test[n] | alpha + beta * input_test[n], sigma);
}
)";
}

std::string slopes_correlated() {
    return std::string(kSlopesData) + R"(parameters {
  vector[2] mu_ab;
  vector<lower=0>[2] tau_ab;
  cholesky_factor_corr[2] L;
  matrix[2, J] z;
  real<lower=0> sigma;
}
transformed parameters {
  matrix[2, J] ab = rep_matrix(mu_ab, J) + diag_pre_multiply(tau_ab, L) * z;
}
model {
  mu_ab ~ normal(0, 5);
  tau_ab ~ normal(0, 2);
  L ~ lkj_corr_cholesky(2);
  to_vector(z) ~ std_normal();
  sigma ~ normal(0, 2);
  for (i in 1:N_train)
    effect_train[i] ~ normal(ab[1, unit_train[i]] + ab[2, unit_train[i]] * input_train[i],
                             sigma);
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test)
    log_lik[n] = normal_lpdf(effect_test[n] |
                             ab[1, unit_test[n]] + ab[2, unit_test[n]] * input_test[n], sigma);
}
)";
}

const char* kSoccerData = R"(data {
  int<lower=0> N_train;
  int<lower=0> N_test;
  int<lower=1> n_teams;
  array[N_train] int<lower=1, upper=n_teams> home_team_train;
  array[N_train] int<lower=1, upper=n_teams> away_team_train;
  array[N_train] int<lower=0> home_goals_train;
  array[N_train] int<lower=0> away_goals_train;
  array[N_test] int<lower=1, upper=n_teams> home_team_test;
  array[N_test] int<lower=1, upper=n_teams> away_team_test;
  array[N_test] int<lower=0> home_goals_test;
  array[N_test] int<lower=0> away_goals_test;
}
)";

std::string soccer_poisson() {
    return std::string(kSoccerData) + R"(parameters {
  real home_adv;
  vector[n_teams] attack;
  vector[n_teams] defense;
}
model {
  home_adv ~ normal(0.2, 0.5);
  attack ~ normal(0, 1);
  defense ~ normal(0, 1);
  for (m in 1:N_train) {
    home_goals_train[m] ~ poisson_log(home_adv + attack[home_team_train[m]]
                                      - defense[away_team_train[m]]);
    away_goals_train[m] ~ poisson_log(attack[away_team_train[m]]
                                      - defense[home_team_train[m]]);
  }
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test) {
    log_lik[n] = poisson_log_lpmf(home_goals_test[n] | home_adv + attack[home_team_test[n]]
                                  - defense[away_team_test[n]])
               + poisson_log_lpmf(away_goals_test[n] | attack[away_team_test[n]]
                                  - defense[home_team_test[n]]);
  }
}
)";
}

std::string soccer_poisson_hierarchical() {
    return std::string(kSoccerData) + R"(parameters {
  real home_adv;
  real<lower=0> sigma_attack;
  real<lower=0> sigma_defense;
  vector[n_teams] attack;
  vector[n_teams] defense;
}
model {
  home_adv ~ normal(0.2, 0.5);
  sigma_attack ~ normal(0, 1);
  sigma_defense ~ normal(0, 1);
  attack ~ normal(0, sigma_attack);
  defense ~ normal(0, sigma_defense);
  for (m in 1:N_train) {
    home_goals_train[m] ~ poisson_log(home_adv + attack[home_team_train[m]]
                                      - defense[away_team_train[m]]);
    away_goals_train[m] ~ poisson_log(attack[away_team_train[m]]
                                      - defense[home_team_train[m]]);
  }
}
generated quantities {
  vector[N_test] log_lik;
  for (n in 1:N_test) {
    log_lik[n] = poisson_log_lpmf(home_goals_test[n] | home_adv + attack[home_team_test[n]]
                                  - defense[away_team_test[n]])
               + poisson_log_lpmf(away_goals_test[n] | attack[away_team_test[n]]
                                  - defense[home_team_test[n]]);
  }
}
)";
}

}  // namespace

const std::map<std::string, std::string>& fixture_models() {
    static const std::map<std::string, std::string> catalog = {
        {"regression_baseline", regression_baseline()},
        {"regression_cubic_student_t", regression_cubic_student_t()},
        {"regression_sine_student_t", regression_sine_student_t()},
        {"regression_sine_logsigma_quad", regression_sine_logsigma_quad()},
        {"mixture_fixed_sigma_out", mixture_fixed_sigma_out(false)},
        {"mixture_cubic_logsigma", mixture_fixed_sigma_out(true)},
        {"hierarchical_centered", hierarchical_centered()},
        {"hierarchical_noncentered", hierarchical_noncentered()},
        {"slopes_pooled", slopes_pooled()},
        {"slopes_correlated", slopes_correlated()},
        {"soccer_poisson", soccer_poisson()},
        {"soccer_poisson_hierarchical", soccer_poisson_hierarchical()},
    };
    return catalog;
}

namespace {

Proposal make(const char* fixture, const char* notes, const char* rationale) {
    Proposal p;
    p.model_text = fixture_models().at(fixture);
    p.notes = notes;
    p.rationale = rationale;
    return p;
}

}  // namespace

std::vector<Proposal> fixture_script(const std::string& set_name) {
    if (set_name == "regression") {
        return {
            make("regression_baseline", "baseline: linear mean, Gaussian likelihood",
                 "deliberately simple starting point"),
            make("regression_cubic_student_t", "cubic polynomial mean + Student-t likelihood",
                 "extreme outliers dominate the Gaussian fit; heavy tails should isolate them"),
            make("regression_sine_student_t", "sine basis mean with learnable frequency",
                 "residual structure looks periodic rather than polynomial"),
            make("regression_sine_logsigma_quad", "quadratic log-scale noise model",
                 "residual spread varies with the predictor"),
            make("mixture_fixed_sigma_out",
                 "two-component contamination mixture, outlier scale fixed at 10",
                 "model outliers explicitly instead of fattening all tails; fixing the outlier "
                 "scale avoids label switching"),
            make("mixture_cubic_logsigma", "cubic log-scale noise inside the mixture",
                 "one more degree of freedom for the local noise bump"),
        };
    }
    if (set_name == "hierarchical") {
        return {
            make("hierarchical_centered", "baseline: centered partial pooling",
                 "grouped data with a shared scale suggests partial pooling from the start"),
            make("hierarchical_noncentered", "non-centered parameterization",
                 "check whether sampler geometry limits the centered fit"),
        };
    }
    if (set_name == "varying-slopes") {
        return {
            make("slopes_pooled", "baseline: fully pooled linear regression",
                 "simplest model that uses the predictor"),
            make("slopes_correlated", "varying intercepts and slopes with LKJ correlation",
                 "group-level scatter suggests per-unit lines with correlated effects"),
        };
    }
    if (set_name == "soccer") {
        return {
            make("soccer_poisson", "baseline: Poisson with attack/defense parameters",
                 "paired count data with 18 units is a classic matchup structure"),
            make("soccer_poisson_hierarchical", "hierarchical priors on attack/defense",
                 "partial pooling should stabilize weak-team estimates"),
        };
    }
    throw invalid_input("unknown fixture script '" + set_name +
                        "' (known: regression, hierarchical, varying-slopes, soccer)");
}

std::vector<std::string> fixture_script_names() {
    return {"regression", "hierarchical", "varying-slopes", "soccer"};
}

std::string agent_instructions() {
    return R"(# Agent Instructions

You are an autonomous Bayesian modeling agent. Your task is to
iteratively improve a Stan model to minimize NLPD (negative log
predictive density) on a held-out test set.

## Workflow

1. **Read the dataset description**: Read
   `datasets/<dataset>/dataset.md` to understand the data, format,
   and evaluation procedure.
2. **Check history**: Before proposing any change, read
   `results/<dataset>/log.jsonl` to see the full NLPD history and
   what has been tried.
3. **Read training data**: Read `datasets/<dataset>/train.csv` to
   understand the data structure and values.
4. **Edit `model.stan`**: Modify the model -- you can change priors,
   likelihood, parameterization, model structure, anything.
5. **Evaluate**: Run the evaluation command given in `dataset.md`.
   Always pass `--notes` (what you changed) and `--rationale` (why,
   referencing previous iterations).
6. **Interpret results**: Read the printed NLPD and diagnostics.
   Decide whether to keep or revert the change.
7. **Repeat**: Propose the next change based on what you've learned.

## Rules

- **NLPD is the only metric.** Lower NLPD = better model.
- **`log_lik` is the only interface contract.** Your `model.stan`
  must always output a `log_lik` vector in the `generated
  quantities` block.
- **Do NOT read any files in `protected/`.**
- **Do NOT randomly perturb.** Think like a statistician reasoning
  from evidence. Reference previous iterations.
- **The filesystem is your memory.** All history is in `results/`
  -- read it before acting.
- **Reason briefly** about *why* you make each change.

## Strategies to Consider

- Non-centered vs centered parameterization
- Prior tightening or loosening
- Different likelihood families (Normal, Student-t, etc.)
- Adding or removing hierarchy levels
- Reparameterization for better sampling efficiency
- Covariate effects, interactions
- Regularizing priors

## Stopping Rule

Stop when **any** of these conditions is met:
- **3 consecutive non-improving iterations**
- **20 total iterations** (including baseline)

When you stop, write `results/<dataset>/report.md` summarizing:
best model, trajectory, NLPD table, and key insights.

## Getting Started

If no `results/<dataset>/log.jsonl` exists yet, write a deliberately
simple baseline model. Run it to establish the baseline NLPD, then
start improving.
)";
}

}  // namespace stanloop::proposer
