"""Reverse-mode autodiff in a few lines: build a graph, backprop, and
spot-check one gradient against central finite differences."""

import numpy as np

import spanparser.autodiff as ad

rng = np.random.default_rng(0)

# a two-layer scorer on random data, all from the op vocabulary the
# parser itself uses
x = ad.tensor(rng.standard_normal((4, 6)))
w1 = ad.tensor(rng.standard_normal((6, 5)), requires_grad=True)
b1 = ad.tensor(np.zeros(5), requires_grad=True)
gain = ad.tensor(np.ones(5), requires_grad=True)
bias = ad.tensor(np.zeros(5), requires_grad=True)
w2 = ad.tensor(rng.standard_normal((5, 3)), requires_grad=True)

def network():
    h = ad.relu(ad.add(ad.matmul(x, w1), b1))
    h = ad.layer_norm(h, gain, bias)
    return ad.sum_all(ad.matmul(h, w2))

loss = network()
ad.backward(loss)
print("loss %.6f" % float(loss.data))
print("dL/dw1 row 0:", np.round(w1.grad[0], 4))

# central finite differences on one coordinate of w1
h = 1e-5
keep = w1.data[0, 0]
w1.data[0, 0] = keep + h
up = float(network().data)
w1.data[0, 0] = keep - h
down = float(network().data)
w1.data[0, 0] = keep
numeric = (up - down) / (2 * h)
print("analytic %.8f vs numeric %.8f" % (w1.grad[0, 0], numeric))
assert abs(numeric - w1.grad[0, 0]) < 1e-6

# gradients accumulate across uses of the same tensor
a = ad.tensor(np.array([[2.0]]), requires_grad=True)
y = ad.add(ad.mul(a, a), ad.mul(a, a))
ad.backward(ad.sum_all(y))
print("d(2a^2)/da at a=2:", a.grad[0, 0])
