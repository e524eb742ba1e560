// One plain gradient step on policy log-probabilities under the SceneDPO
// objective, checked against central differences.

#include <cstdio>

#include "cfgtok/cfgtok.hpp"

using namespace cfgtok;

int main() {
  SceneDPOBatch batch{
      {-1.2, -3.1, -1.9, std::nullopt},
      {-0.45, -0.4, -2.7, std::nullopt},
      {-2.05, -4.8, -2.0, std::nullopt},
  };
  const SceneDPOConfig cfg;  // w_a = w_s = 0.5, beta_a = 0.2, beta_s = 0.03, reference-free

  const SceneDPOLoss before = loss(batch, cfg);
  const auto g = grad(batch, cfg);
  std::printf("total %.6f  (L_a %.6f, L_s %.6f, L_nll %.6f)\n", before.total, before.answer, before.scene,
              before.nll);
  std::printf("gradient check residual %.2e\n", dpo_gradient_residual(batch, cfg));

  constexpr double lr = 0.1;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    batch[n].lp_pos = std::min(0.0, batch[n].lp_pos - lr * g[n].d_pos);
    batch[n].lp_negans -= lr * g[n].d_negans;
    batch[n].lp_negscene -= lr * g[n].d_negscene;
  }
  const DpoAccuracy acc = accuracy_metrics(batch);
  std::printf("after one step: total %.6f, answer acc %.2f, scene acc %.2f\n", loss(batch, cfg).total, acc.answer,
              acc.scene);
  return 0;
}
