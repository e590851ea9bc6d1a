#include <cstdio>
#include "stsccl/tensor.hpp"
#include "stsccl/nn.hpp"
#include "stsccl/graph_data.hpp"
using namespace stsccl;
int main() {
  Var a = make_leaf(Tensor({2,3}, {1,2,3,4,5,6}));
  Var b = make_leaf(Tensor({3,2}, {1,0,0,1,1,1}));
  Var c = matmul(a, b);
  Var loss = sum_all(square(c));
  backward(loss);
  std::printf("loss=%g ga00=%g\n", loss->value.item(), a->grad.at({0,0}));
  auto [s, g] = data::synth_traffic(8, 8, 60, 7);
  std::printf("T=%lld N=%lld\n", (long long)s.T(), (long long)g.n_nodes);
  return 0;
}
