#ifndef ERGOGAME_DIRICHLET_HPP_
#define ERGOGAME_DIRICHLET_HPP_

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergogame/domain.hpp"
#include "ergogame/model.hpp"

namespace ergogame {

class DirichletError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Source problem on a finite domain with killing outside it:
//   val_i[ sum_{j in D} phi(j) q(j|i,a,b) + shifted_cost(i,a,b) phi(i) ] = -g(i)
struct DirichletProblem {
  Domain domain;
  std::vector<double> shifted_cost;  // flat pair index; <= -margin on domain
  std::vector<double> source;        // per stored state; zero outside domain
  double margin = 1.0;               // delta
};

// Throws DirichletError when sizes or sign conditions fail.
void check_problem(const GameModel& model, const DirichletProblem& problem);

// max over domain and pure pairs of q(i)/(q(i) - shifted_cost), where
// q(i) = -q(i|i,a,b). Mixed pairs cannot exceed the pure maximum.
double contraction_bound(const GameModel& model,
                         const DirichletProblem& problem);

// F(x) for state i: value of the game with entries
//   sum_{j != i, j in D} y(j) q(j|i,a,b) + (q(i|i,a,b) + shifted_cost) x.
double evaluate_F(const GameModel& model, const DirichletProblem& problem,
                  StateIndex i, std::span<const double> y, double x);

// Root of F(x) = target. With tol <= 0 the root is refined to rounding level.
double solve_F(const GameModel& model, const DirichletProblem& problem,
               StateIndex i, std::span<const double> y, double target,
               double tol = 0.0, double guess = 0.0);

std::vector<double> apply_T_hat(const GameModel& model,
                                const DirichletProblem& problem,
                                std::span<const double> phi, double tol = 0.0,
                                unsigned threads = 1);

enum class DirichletMethod { jacobi, gauss_seidel, policy };

const char* to_string(DirichletMethod m);

struct DirichletOptions {
  DirichletMethod method = DirichletMethod::jacobi;
  double tol = 1e-10;
  std::size_t max_iterations = 1000000;
  std::vector<double> initial;  // full length; empty means zero
  bool certify = true;          // compute the literal fixed-point residual
  unsigned threads = 1;
};

struct DirichletStats {
  DirichletMethod method = DirichletMethod::jacobi;
  std::size_t iterations = 0;
  double residual = 0.0;        // ||T_hat phi - phi|| on the domain
  double measured_ratio = 0.0;  // max_k of successive difference ratios
  double ratio_bound = 0.0;     // a-priori contraction bound
  double equation_residual = 0.0;  // max_i |val_i + g(i)|
};

struct DirichletResult {
  std::vector<double> phi;  // full length, zero outside the domain
  DirichletStats stats;
};

DirichletResult dirichlet_solve(const GameModel& model,
                                const DirichletProblem& problem,
                                const DirichletOptions& options = {});

// max_i over the domain of |val_i[...] + g(i)|.
double equation_residual(const GameModel& model,
                         const DirichletProblem& problem,
                         std::span<const double> phi);

}  // namespace ergogame

#endif  // ERGOGAME_DIRICHLET_HPP_
