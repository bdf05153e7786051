"""
Checking backpropagation against finite differences
===================================================

Every weight and bias is nudged by +-h and the central difference of the
squared TD error is compared with the analytic gradient.
"""

# %%
import numpy as np

from mmlab.neural import forward, gradient_check, init_network, loss_and_grad, param_count, random_check_pair

net = init_network(0)
print("layers", net.layer_sizes, "parameters", param_count(net.layer_sizes))
x = np.array([0.1, -0.5, 0.9])
print("q-values", np.round(forward(net, x), 4))

# %%
loss, grads = loss_and_grad(net, x, action_index=10, target=1.0)
print(f"loss {loss:.5f}, gradient norm {np.linalg.norm(grads.flatten()):.5f}")

# %%
rng = np.random.default_rng(2024)
errors = [gradient_check(*random_check_pair(rng), h=1e-5) for _ in range(100)]
print(f"max relative error over 100 random pairs: {max(errors):.2e}")
