#include "stockcast/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stockcast/errors.hpp"

namespace stockcast::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
    raise(ErrorKind::ShapeMismatch, std::string(op) + ": " + detail);
}

void require_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2) shape_error(op, "expected rank-2 tensor, got " + t.shape_str());
}

}  // namespace

Var Tape::push(Tensor value, bool requires_grad,
               std::function<void(Tape&, const Tensor&)> back, const char* op) {
    if (!value.all_finite()) {
        raise(ErrorKind::NonFiniteValue, std::string(op) + " produced a non-finite value");
    }
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(back)});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buf(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

const Tensor& Tape::grad(Var v) { return grad_buf(v); }

Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr, "leaf");
}

void Tape::backward(Var loss) {
    if (value(loss).numel() != 1) {
        raise(ErrorKind::NonScalarLoss, "backward requires a scalar loss");
    }
    if (consumed_) {
        raise(ErrorKind::TapeAlreadyConsumed, "backward already ran; reset the tape first");
    }
    consumed_ = true;
    grad_buf(loss)[0] = 1.0;
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
        n.backward(*this, n.grad);
    }
}

void Tape::reset() {
    nodes_.clear();
    consumed_ = false;
}

// ---------------------------------------------------------------- matmul

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank2("matmul", ta);
    require_rank2("matmul", tb);
    if (ta.cols() != tb.rows()) {
        shape_error("matmul", "inner dims " + ta.shape_str() + " x " + tb.shape_str());
    }
    const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = ta.data() + i * k;
        double* orow = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = tb.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    const bool rg = needs(a) || needs(b);
    auto back = [a, b, m, k, n](Tape& t, const Tensor& g) {
        const Tensor& ta = t.value(a);
        const Tensor& tb = t.value(b);
        if (t.needs(a)) {
            Tensor& da = t.grad_buf(a);  // g (m,n) * tb^T (n,k)
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g.data() + i * n;
                double* drow = da.data() + i * k;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = tb.data() + p * n;
                    double s = 0;
                    for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                    drow[p] += s;
                }
            }
        }
        if (t.needs(b)) {
            Tensor& db = t.grad_buf(b);  // ta^T (k,m) * g (m,n)
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = ta.data() + i * k;
                const double* grow = g.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = arow[p];
                    if (av == 0.0) continue;
                    double* dbrow = db.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * grow[j];
                }
            }
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "matmul");
}

// ---------------------------------------------------------------- add / mul

Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    const bool broadcast =
        !ta.same_shape(tb) && ta.rank() == 2 && tb.rank() == 2 && tb.rows() == 1 &&
        tb.cols() == ta.cols();
    if (!ta.same_shape(tb) && !broadcast) {
        shape_error("add", ta.shape_str() + " vs " + tb.shape_str());
    }
    Tensor out = ta;
    if (broadcast) {
        for (std::size_t r = 0; r < ta.rows(); ++r) {
            for (std::size_t c = 0; c < ta.cols(); ++c) out.at(r, c) += tb.at(0, c);
        }
    } else {
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    }
    const bool rg = needs(a) || needs(b);
    auto back = [a, b, broadcast](Tape& t, const Tensor& g) {
        if (t.needs(a)) {
            Tensor& da = t.grad_buf(a);
            for (std::size_t i = 0; i < g.numel(); ++i) da[i] += g[i];
        }
        if (t.needs(b)) {
            Tensor& db = t.grad_buf(b);
            if (broadcast) {
                const std::size_t cols = db.cols();
                for (std::size_t i = 0; i < g.numel(); ++i) db[i % cols] += g[i];
            } else {
                for (std::size_t i = 0; i < g.numel(); ++i) db[i] += g[i];
            }
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "add");
}

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) shape_error("elementwise_mul", ta.shape_str() + " vs " + tb.shape_str());
    Tensor out = ta;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
    const bool rg = needs(a) || needs(b);
    auto back = [a, b](Tape& t, const Tensor& g) {
        const Tensor& ta = t.value(a);
        const Tensor& tb = t.value(b);
        if (t.needs(a)) {
            Tensor& da = t.grad_buf(a);
            for (std::size_t i = 0; i < g.numel(); ++i) da[i] += g[i] * tb[i];
        }
        if (t.needs(b)) {
            Tensor& db = t.grad_buf(b);
            for (std::size_t i = 0; i < g.numel(); ++i) db[i] += g[i] * ta[i];
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "elementwise_mul");
}

Var Tape::scale(Var a, double c) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    const bool rg = needs(a);
    auto back = [a, c](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_buf(a);
        for (std::size_t i = 0; i < g.numel(); ++i) da[i] += c * g[i];
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "scale");
}

// ---------------------------------------------------------------- shape ops

Var Tape::concat(std::span<const Var> parts, std::size_t axis) {
    if (parts.empty()) shape_error("concat", "no inputs");
    if (axis > 1) shape_error("concat", "axis must be 0 or 1");
    const Tensor& first = value(parts[0]);
    require_rank2("concat", first);
    std::size_t rows = first.rows(), cols = first.cols();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const Tensor& ti = value(parts[i]);
        require_rank2("concat", ti);
        if (axis == 0) {
            if (ti.cols() != cols) shape_error("concat", "column mismatch");
            rows += ti.rows();
        } else {
            if (ti.rows() != rows) shape_error("concat", "row mismatch");
            cols += ti.cols();
        }
    }
    Tensor out;
    std::vector<std::size_t> offsets(parts.size());
    if (axis == 0) {
        out = Tensor({rows, cols});
        std::size_t r0 = 0;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const Tensor& ti = value(parts[i]);
            offsets[i] = r0;
            std::copy(ti.data(), ti.data() + ti.numel(), out.data() + r0 * cols);
            r0 += ti.rows();
        }
    } else {
        out = Tensor({rows, cols});
        std::size_t c0 = 0;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const Tensor& ti = value(parts[i]);
            offsets[i] = c0;
            for (std::size_t r = 0; r < rows; ++r) {
                std::copy(ti.data() + r * ti.cols(), ti.data() + (r + 1) * ti.cols(),
                          out.data() + r * cols + c0);
            }
            c0 += ti.cols();
        }
    }

    std::vector<Var> ins(parts.begin(), parts.end());
    bool rg = false;
    for (const Var& p : ins) rg = rg || needs(p);
    auto back = [ins, offsets, axis](Tape& t, const Tensor& g) {
        for (std::size_t i = 0; i < ins.size(); ++i) {
            if (!t.needs(ins[i])) continue;
            Tensor& di = t.grad_buf(ins[i]);
            if (axis == 0) {
                const std::size_t cols = di.cols();
                for (std::size_t k = 0; k < di.numel(); ++k) {
                    di[k] += g[offsets[i] * cols + k];
                }
            } else {
                for (std::size_t r = 0; r < di.rows(); ++r) {
                    for (std::size_t c = 0; c < di.cols(); ++c) {
                        di.at(r, c) += g.at(r, offsets[i] + c);
                    }
                }
            }
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "concat");
}

Var Tape::slice(Var a, std::size_t axis, std::size_t start, std::size_t len) {
    const Tensor& ta = value(a);
    require_rank2("slice", ta);
    if (axis > 1) shape_error("slice", "axis must be 0 or 1");
    const std::size_t bound = axis == 0 ? ta.rows() : ta.cols();
    if (len == 0 || start + len > bound) shape_error("slice", "range out of bounds");

    Tensor out(axis == 0 ? std::vector<std::size_t>{len, ta.cols()}
                         : std::vector<std::size_t>{ta.rows(), len});
    if (axis == 0) {
        std::copy(ta.data() + start * ta.cols(), ta.data() + (start + len) * ta.cols(),
                  out.data());
    } else {
        for (std::size_t r = 0; r < ta.rows(); ++r) {
            std::copy(ta.data() + r * ta.cols() + start,
                      ta.data() + r * ta.cols() + start + len, out.data() + r * len);
        }
    }
    const bool rg = needs(a);
    auto back = [a, axis, start, len](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_buf(a);
        if (axis == 0) {
            for (std::size_t k = 0; k < g.numel(); ++k) da[start * da.cols() + k] += g[k];
        } else {
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < len; ++c) da.at(r, start + c) += g.at(r, c);
            }
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "slice");
}

Var Tape::transpose(Var a) {
    const Tensor& ta = value(a);
    require_rank2("transpose", ta);
    Tensor out({ta.cols(), ta.rows()});
    for (std::size_t r = 0; r < ta.rows(); ++r) {
        for (std::size_t c = 0; c < ta.cols(); ++c) out.at(c, r) = ta.at(r, c);
    }
    const bool rg = needs(a);
    auto back = [a](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_buf(a);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) da.at(c, r) += g.at(r, c);
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "transpose");
}

// ---------------------------------------------------------------- conv1d

Var Tape::conv1d(Var x, Var kernel, Var bias) {
    const Tensor& tx = value(x);
    const Tensor& tk = value(kernel);
    const Tensor& tb = value(bias);
    require_rank2("conv1d", tx);
    if (tk.rank() != 3) shape_error("conv1d", "kernel must be (Cout x Cin x K)");
    const std::size_t len = tx.rows(), cin = tx.cols();
    const std::size_t cout = tk.shape()[0], kcin = tk.shape()[1], kw = tk.shape()[2];
    if (kcin != cin) shape_error("conv1d", "kernel Cin != input channels");
    if (kw % 2 == 0) shape_error("conv1d", "kernel width must be odd for same padding");
    if (tb.rank() != 2 || tb.rows() != 1 || tb.cols() != cout) {
        shape_error("conv1d", "bias must be (1 x Cout)");
    }
    const std::size_t pad = kw / 2;

    Tensor out({len, cout});
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t co = 0; co < cout; ++co) {
            double s = tb.at(0, co);
            for (std::size_t k = 0; k < kw; ++k) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) -
                                           static_cast<std::ptrdiff_t>(pad);
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    s += tx.at(static_cast<std::size_t>(src), ci) * tk.at3(co, ci, k);
                }
            }
            out.at(t, co) = s;
        }
    }
    const bool rg = needs(x) || needs(kernel) || needs(bias);
    auto back = [x, kernel, bias, len, cin, cout, kw, pad](Tape& t, const Tensor& g) {
        const Tensor& tx = t.value(x);
        const Tensor& tk = t.value(kernel);
        const bool nx = t.needs(x), nk = t.needs(kernel), nb = t.needs(bias);
        for (std::size_t ti = 0; ti < len; ++ti) {
            for (std::size_t co = 0; co < cout; ++co) {
                const double gv = g.at(ti, co);
                if (gv == 0.0) continue;
                if (nb) t.grad_buf(bias).at(0, co) += gv;
                for (std::size_t k = 0; k < kw; ++k) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(ti + k) -
                                               static_cast<std::ptrdiff_t>(pad);
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        if (nx) {
                            t.grad_buf(x).at(static_cast<std::size_t>(src), ci) +=
                                gv * tk.at3(co, ci, k);
                        }
                        if (nk) {
                            t.grad_buf(kernel).at3(co, ci, k) +=
                                gv * tx.at(static_cast<std::size_t>(src), ci);
                        }
                    }
                }
            }
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "conv1d");
}

// ---------------------------------------------------------------- softmax

Var Tape::softmax(Var a, std::size_t axis) {
    const Tensor& ta = value(a);
    require_rank2("softmax", ta);
    if (axis > 1) shape_error("softmax", "axis must be 0 or 1");
    Tensor out = ta;
    const std::size_t nslices = axis == 1 ? ta.rows() : ta.cols();
    const std::size_t slice_len = axis == 1 ? ta.cols() : ta.rows();
    const auto idx = [axis, nslices, slice_len](std::size_t s, std::size_t i) {
        return axis == 1 ? s * slice_len + i : i * nslices + s;
    };
    for (std::size_t s = 0; s < nslices; ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < slice_len; ++i) mx = std::max(mx, out[idx(s, i)]);
        double sum = 0;
        for (std::size_t i = 0; i < slice_len; ++i) {
            double& v = out[idx(s, i)];
            v = std::exp(v - mx);
            sum += v;
        }
        for (std::size_t i = 0; i < slice_len; ++i) out[idx(s, i)] /= sum;
    }
    const bool rg = needs(a);
    Var me{static_cast<std::uint32_t>(nodes_.size())};
    auto back = [a, me, idx, nslices, slice_len](Tape& t, const Tensor& g) {
        const Tensor& y = t.value(me);
        Tensor& da = t.grad_buf(a);
        for (std::size_t s = 0; s < nslices; ++s) {
            double dot = 0;
            for (std::size_t i = 0; i < slice_len; ++i) {
                dot += g[idx(s, i)] * y[idx(s, i)];
            }
            for (std::size_t i = 0; i < slice_len; ++i) {
                da[idx(s, i)] += y[idx(s, i)] * (g[idx(s, i)] - dot);
            }
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "softmax");
}

// ---------------------------------------------------------------- pointwise

Var Tape::sigmoid(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    const bool rg = needs(a);
    Var me{static_cast<std::uint32_t>(nodes_.size())};
    auto back = [a, me](Tape& t, const Tensor& g) {
        const Tensor& y = t.value(me);
        Tensor& da = t.grad_buf(a);
        for (std::size_t i = 0; i < g.numel(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "sigmoid");
}

Var Tape::tanh(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    const bool rg = needs(a);
    Var me{static_cast<std::uint32_t>(nodes_.size())};
    auto back = [a, me](Tape& t, const Tensor& g) {
        const Tensor& y = t.value(me);
        Tensor& da = t.grad_buf(a);
        for (std::size_t i = 0; i < g.numel(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "tanh");
}

Var Tape::relu(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::max(0.0, out[i]);
    const bool rg = needs(a);
    auto back = [a](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        Tensor& da = t.grad_buf(a);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            if (x[i] > 0) da[i] += g[i];
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "relu");
}

Var Tape::dropout(Var a, double rate, Rng& rng, bool train) {
    if (rate < 0 || rate >= 1) raise(ErrorKind::BadParams, "dropout rate must be in [0,1)");
    if (!train) return a;  // eval mode: exact identity
    const Tensor& ta = value(a);
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor mask(ta.shape());
    for (std::size_t i = 0; i < mask.numel(); ++i) {
        mask[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    }
    Tensor out = ta;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= mask[i];
    const bool rg = needs(a);
    auto back = [a, mask](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_buf(a);
        for (std::size_t i = 0; i < g.numel(); ++i) da[i] += g[i] * mask[i];
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "dropout");
}

// ---------------------------------------------------------------- reductions

Var Tape::mean(Var a) {
    const Tensor& ta = value(a);
    double s = 0;
    for (std::size_t i = 0; i < ta.numel(); ++i) s += ta[i];
    const double inv_n = 1.0 / static_cast<double>(ta.numel());
    Tensor out = Tensor::scalar(s * inv_n);
    const bool rg = needs(a);
    auto back = [a, inv_n](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_buf(a);
        const double gv = g[0] * inv_n;
        for (std::size_t i = 0; i < da.numel(); ++i) da[i] += gv;
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "mean");
}

Var Tape::mse_loss(Var pred, Var target) {
    const Tensor& tp = value(pred);
    const Tensor& tt = value(target);
    if (!tp.same_shape(tt)) {
        shape_error("mse_loss", tp.shape_str() + " vs " + tt.shape_str());
    }
    double s = 0;
    for (std::size_t i = 0; i < tp.numel(); ++i) {
        const double d = tp[i] - tt[i];
        s += d * d;
    }
    const double inv_n = 1.0 / static_cast<double>(tp.numel());
    Tensor out = Tensor::scalar(s * inv_n);
    const bool rg = needs(pred) || needs(target);
    auto back = [pred, target, inv_n](Tape& t, const Tensor& g) {
        const Tensor& tp = t.value(pred);
        const Tensor& tt = t.value(target);
        const double c = 2.0 * inv_n * g[0];
        if (t.needs(pred)) {
            Tensor& dp = t.grad_buf(pred);
            for (std::size_t i = 0; i < tp.numel(); ++i) dp[i] += c * (tp[i] - tt[i]);
        }
        if (t.needs(target)) {
            Tensor& dt = t.grad_buf(target);
            for (std::size_t i = 0; i < tp.numel(); ++i) dt[i] -= c * (tp[i] - tt[i]);
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "mse_loss");
}

Var Tape::stack_rows(std::span<const Var> mats, std::size_t row) {
    if (mats.empty()) shape_error("stack_rows", "no inputs");
    const Tensor& first = value(mats[0]);
    require_rank2("stack_rows", first);
    const std::size_t cols = first.cols();
    if (row >= first.rows()) shape_error("stack_rows", "row out of range");
    for (const Var& m : mats) {
        const Tensor& tm = value(m);
        if (tm.rank() != 2 || tm.rows() != first.rows() || tm.cols() != cols) {
            shape_error("stack_rows", "inputs must share shape");
        }
    }
    Tensor out({mats.size(), cols});
    for (std::size_t b = 0; b < mats.size(); ++b) {
        const Tensor& tm = value(mats[b]);
        std::copy(tm.data() + row * cols, tm.data() + (row + 1) * cols,
                  out.data() + b * cols);
    }
    std::vector<Var> ins(mats.begin(), mats.end());
    bool rg = false;
    for (const Var& m : ins) rg = rg || needs(m);
    auto back = [ins, row, cols](Tape& t, const Tensor& g) {
        for (std::size_t b = 0; b < ins.size(); ++b) {
            if (!t.needs(ins[b])) continue;
            Tensor& dm = t.grad_buf(ins[b]);
            for (std::size_t c = 0; c < cols; ++c) dm.at(row, c) += g.at(b, c);
        }
    };
    return push(std::move(out), rg, rg ? std::function<void(Tape&, const Tensor&)>(back) : nullptr,
                "stack_rows");
}

}  // namespace stockcast::ad
