#include "lyricnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace lyricnet {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank-" + std::to_string(rank) +
                             " operand, got " + t.shape_str());
    }
}

}  // namespace

const Tensor& Tape::grad_of_const(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

Tensor& Tape::grad_of(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Tape::ensure_finite(const Tensor& t, const char* op, const char* phase) const {
    if (check_finite && !all_finite(t)) {
        throw NumericError(std::string("non-finite value in ") + phase + " of op '" + op + "'");
    }
}

Var Tape::push(Tensor value, const char* op, std::function<void(Tape&, const Tensor&)> backward_fn) {
    ensure_finite(value, op, "forward");
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.backward_fn = std::move(backward_fn);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor v) { return push(std::move(v), "constant", nullptr); }

Var Tape::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var{this, it->second};
    Var v = push(p.value, "param", nullptr);
    nodes_[static_cast<std::size_t>(v.id)].parameter = &p;
    param_nodes_[&p] = v.id;
    return v;
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value_of(a.id);
    const Tensor& tb = value_of(b.id);
    require_rank(ta, 2, "matmul");
    const std::size_t m = ta.rows(), k = ta.cols();
    const bool vec_rhs = tb.rank() == 1;
    const std::size_t kb = vec_rhs ? tb.dim(0) : tb.rows();
    const std::size_t n = vec_rhs ? 1 : tb.cols();
    if (k != kb) {
        throw DimensionError("matmul: inner dimensions disagree, " + ta.shape_str() + " vs " +
                             tb.shape_str());
    }
    Tensor out(vec_rhs ? std::vector<std::size_t>{m} : std::vector<std::size_t>{m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const Real av = ta.at(i, kk);
            if (av == Real(0)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                out[i * n + j] += av * tb[kk * n + j];
            }
        }
    }
    const int aid = a.id, bid = b.id;
    return push(std::move(out), "matmul", [aid, bid, m, k, n](Tape& t, const Tensor& g) {
        const Tensor& av = t.value_of(aid);
        const Tensor& bv = t.value_of(bid);
        Tensor& da = t.grad_of(aid);
        Tensor& db = t.grad_of(bid);
        // dA = G B^T, dB = A^T G
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t kk = 0; kk < k; ++kk) {
                Real acc = 0;
                for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[kk * n + j];
                da[i * k + kk] += acc;
            }
        }
        for (std::size_t kk = 0; kk < k; ++kk) {
            for (std::size_t i = 0; i < m; ++i) {
                const Real av_ik = av.at(i, kk);
                if (av_ik == Real(0)) continue;
                for (std::size_t j = 0; j < n; ++j) db[kk * n + j] += av_ik * g[i * n + j];
            }
        }
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    const Tensor& ta = value_of(a.id);
    const Tensor& tb = value_of(b.id);
    require_rank(ta, 2, "matmul_nt");
    require_rank(tb, 2, "matmul_nt");
    if (ta.cols() != tb.cols()) {
        throw DimensionError("matmul_nt: inner dimensions disagree, " + ta.shape_str() + " vs " +
                             tb.shape_str() + "^T");
    }
    const std::size_t n = ta.rows(), m = ta.cols(), kdim = tb.rows();
    Tensor out({n, kdim});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < kdim; ++j) {
            Real acc = 0;
            for (std::size_t c = 0; c < m; ++c) acc += ta.at(i, c) * tb.at(j, c);
            out.at(i, j) = acc;
        }
    }
    const int aid = a.id, bid = b.id;
    return push(std::move(out), "matmul_nt", [aid, bid, n, m, kdim](Tape& t, const Tensor& g) {
        const Tensor& av = t.value_of(aid);
        const Tensor& bv = t.value_of(bid);
        Tensor& da = t.grad_of(aid);
        Tensor& db = t.grad_of(bid);
        // out = A B^T: dA = G B, dB = G^T A
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < m; ++c) {
                Real acc = 0;
                for (std::size_t j = 0; j < kdim; ++j) acc += g.at(i, j) * bv.at(j, c);
                da.at(i, c) += acc;
            }
        }
        for (std::size_t j = 0; j < kdim; ++j) {
            for (std::size_t c = 0; c < m; ++c) {
                Real acc = 0;
                for (std::size_t i = 0; i < n; ++i) acc += g.at(i, j) * av.at(i, c);
                db.at(j, c) += acc;
            }
        }
    });
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = value_of(a.id);
    const Tensor& tb = value_of(b.id);
    require_same_shape(ta, tb, "add");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
    const int aid = a.id, bid = b.id;
    return push(std::move(out), "add", [aid, bid](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_of(aid);
        Tensor& db = t.grad_of(bid);
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += g[i];
            db[i] += g[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor& ta = value_of(a.id);
    const Tensor& tb = value_of(b.id);
    require_same_shape(ta, tb, "sub");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tb[i];
    const int aid = a.id, bid = b.id;
    return push(std::move(out), "sub", [aid, bid](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_of(aid);
        Tensor& db = t.grad_of(bid);
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += g[i];
            db[i] -= g[i];
        }
    });
}

Var Tape::hadamard(Var a, Var b) {
    const Tensor& ta = value_of(a.id);
    const Tensor& tb = value_of(b.id);
    require_same_shape(ta, tb, "hadamard");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
    const int aid = a.id, bid = b.id;
    return push(std::move(out), "hadamard", [aid, bid](Tape& t, const Tensor& g) {
        const Tensor& av = t.value_of(aid);
        const Tensor& bv = t.value_of(bid);
        Tensor& da = t.grad_of(aid);
        Tensor& db = t.grad_of(bid);
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += g[i] * bv[i];
            db[i] += g[i] * av[i];
        }
    });
}

Var Tape::emax(Var a, Var b) {
    const Tensor& ta = value_of(a.id);
    const Tensor& tb = value_of(b.id);
    require_same_shape(ta, tb, "emax");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(ta[i], tb[i]);
    const int aid = a.id, bid = b.id;
    return push(std::move(out), "emax", [aid, bid](Tape& t, const Tensor& g) {
        const Tensor& av = t.value_of(aid);
        const Tensor& bv = t.value_of(bid);
        Tensor& da = t.grad_of(aid);
        Tensor& db = t.grad_of(bid);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (av[i] >= bv[i]) {
                da[i] += g[i];
            } else {
                db[i] += g[i];
            }
        }
    });
}

Var Tape::add_rowvec(Var m, Var v) {
    const Tensor& tm = value_of(m.id);
    const Tensor& tv = value_of(v.id);
    require_rank(tm, 2, "add_rowvec");
    require_rank(tv, 1, "add_rowvec");
    if (tm.cols() != tv.dim(0)) {
        throw DimensionError("add_rowvec: shape mismatch " + tm.shape_str() + " vs " + tv.shape_str());
    }
    const std::size_t rows = tm.rows(), cols = tm.cols();
    Tensor out = tm;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += tv[c];
    const int mid = m.id, vid = v.id;
    return push(std::move(out), "add_rowvec", [mid, vid, rows, cols](Tape& t, const Tensor& g) {
        Tensor& dm = t.grad_of(mid);
        Tensor& dv = t.grad_of(vid);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                dm.at(r, c) += g.at(r, c);
                dv[c] += g.at(r, c);
            }
        }
    });
}

Var Tape::sigmoid(Var x) {
    const Tensor& tx = value_of(x.id);
    Tensor out = tx;
    for (Real& v : out.data()) v = Real(1) / (Real(1) + std::exp(-v));
    const int xid = x.id;
    return push(std::move(out), "sigmoid", [xid, self = static_cast<int>(nodes_.size())](Tape& t, const Tensor& g) {
        const Tensor& y = t.value_of(self);
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (Real(1) - y[i]);
    });
}

Var Tape::tanh(Var x) {
    const Tensor& tx = value_of(x.id);
    Tensor out = tx;
    for (Real& v : out.data()) v = std::tanh(v);
    const int xid = x.id;
    return push(std::move(out), "tanh", [xid, self = static_cast<int>(nodes_.size())](Tape& t, const Tensor& g) {
        const Tensor& y = t.value_of(self);
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (Real(1) - y[i] * y[i]);
    });
}

Var Tape::exp(Var x) {
    const Tensor& tx = value_of(x.id);
    Tensor out = tx;
    for (Real& v : out.data()) v = std::exp(v);
    const int xid = x.id;
    return push(std::move(out), "exp", [xid, self = static_cast<int>(nodes_.size())](Tape& t, const Tensor& g) {
        const Tensor& y = t.value_of(self);
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i];
    });
}

Var Tape::log(Var x) {
    const Tensor& tx = value_of(x.id);
    Tensor out = tx;
    for (Real& v : out.data()) {
        if (v <= Real(0)) {
            throw NumericError("log: non-positive input " + std::to_string(static_cast<double>(v)));
        }
        v = std::log(v);
    }
    const int xid = x.id;
    return push(std::move(out), "log", [xid](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value_of(xid);
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / xv[i];
    });
}

Var Tape::neg(Var x) {
    Tensor out = value_of(x.id);
    for (Real& v : out.data()) v = -v;
    const int xid = x.id;
    return push(std::move(out), "neg", [xid](Tape& t, const Tensor& g) {
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] -= g[i];
    });
}

Var Tape::one_minus(Var x) {
    Tensor out = value_of(x.id);
    for (Real& v : out.data()) v = Real(1) - v;
    const int xid = x.id;
    return push(std::move(out), "one_minus", [xid](Tape& t, const Tensor& g) {
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] -= g[i];
    });
}

Var Tape::scale(Var x, Real c) {
    Tensor out = value_of(x.id);
    for (Real& v : out.data()) v *= c;
    const int xid = x.id;
    return push(std::move(out), "scale", [xid, c](Tape& t, const Tensor& g) {
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += c * g[i];
    });
}

Var Tape::softmax(Var x) {
    const Tensor& tx = value_of(x.id);
    require_rank(tx, 1, "softmax");
    if (tx.size() == 0) throw DimensionError("softmax: empty input");
    const Real mx = *std::max_element(tx.data().begin(), tx.data().end());
    Tensor out = tx;
    Real denom = 0;
    for (Real& v : out.data()) {
        v = std::exp(v - mx);
        denom += v;
    }
    for (Real& v : out.data()) v /= denom;
    const int xid = x.id;
    return push(std::move(out), "softmax", [xid, self = static_cast<int>(nodes_.size())](Tape& t, const Tensor& g) {
        const Tensor& y = t.value_of(self);
        Tensor& dx = t.grad_of(xid);
        Real dot = 0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += y[i] * (g[i] - dot);
    });
}

Var Tape::log_softmax(Var x) {
    const Tensor& tx = value_of(x.id);
    require_rank(tx, 1, "log_softmax");
    if (tx.size() == 0) throw DimensionError("log_softmax: empty input");
    const Real mx = *std::max_element(tx.data().begin(), tx.data().end());
    Real denom = 0;
    for (Real v : tx.data()) denom += std::exp(v - mx);
    const Real lse = mx + std::log(denom);
    Tensor out = tx;
    for (Real& v : out.data()) v -= lse;
    const int xid = x.id;
    return push(std::move(out), "log_softmax", [xid, self = static_cast<int>(nodes_.size())](Tape& t, const Tensor& g) {
        const Tensor& y = t.value_of(self);
        Tensor& dx = t.grad_of(xid);
        Real gsum = 0;
        for (std::size_t i = 0; i < g.size(); ++i) gsum += g[i];
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] - std::exp(y[i]) * gsum;
    });
}

Var Tape::concat(Var a, Var b) {
    const Tensor& ta = value_of(a.id);
    const Tensor& tb = value_of(b.id);
    require_rank(ta, 1, "concat");
    require_rank(tb, 1, "concat");
    std::vector<Real> d;
    d.reserve(ta.size() + tb.size());
    d.insert(d.end(), ta.data().begin(), ta.data().end());
    d.insert(d.end(), tb.data().begin(), tb.data().end());
    const std::size_t na = ta.size();
    const int aid = a.id, bid = b.id;
    return push(Tensor::vec(std::move(d)), "concat", [aid, bid, na](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_of(aid);
        Tensor& db = t.grad_of(bid);
        for (std::size_t i = 0; i < na; ++i) da[i] += g[i];
        for (std::size_t i = na; i < g.size(); ++i) db[i - na] += g[i];
    });
}

Var Tape::row(Var m, std::size_t r) {
    const Tensor& tm = value_of(m.id);
    require_rank(tm, 2, "row");
    if (r >= tm.rows()) {
        throw DimensionError("row: index " + std::to_string(r) + " out of range for " + tm.shape_str());
    }
    const std::size_t d = tm.cols();
    std::vector<Real> data(tm.data().begin() + static_cast<std::ptrdiff_t>(r * d),
                           tm.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    const int mid = m.id;
    return push(Tensor::vec(std::move(data)), "row", [mid, r, d](Tape& t, const Tensor& g) {
        Tensor& dm = t.grad_of(mid);
        for (std::size_t c = 0; c < d; ++c) dm.at(r, c) += g[c];
    });
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) throw DimensionError("stack_rows: empty row list");
    const std::size_t d = value_of(rows[0].id).size();
    std::vector<Real> data;
    data.reserve(rows.size() * d);
    std::vector<int> ids;
    ids.reserve(rows.size());
    for (const Var& r : rows) {
        const Tensor& tr = value_of(r.id);
        require_rank(tr, 1, "stack_rows");
        if (tr.size() != d) {
            throw DimensionError("stack_rows: row length mismatch " + tr.shape_str() + " vs [" +
                                 std::to_string(d) + "]");
        }
        data.insert(data.end(), tr.data().begin(), tr.data().end());
        ids.push_back(r.id);
    }
    return push(Tensor({rows.size(), d}, std::move(data)), "stack_rows",
                [ids, d](Tape& t, const Tensor& g) {
                    for (std::size_t r = 0; r < ids.size(); ++r) {
                        Tensor& dr = t.grad_of(ids[r]);
                        for (std::size_t c = 0; c < d; ++c) dr[c] += g[r * d + c];
                    }
                });
}

Var Tape::mean_rows(Var m, const std::vector<std::size_t>& keep) {
    const Tensor& tm = value_of(m.id);
    require_rank(tm, 2, "mean_rows");
    if (keep.empty()) throw DimensionError("mean_rows: no rows selected");
    const std::size_t d = tm.cols();
    Tensor out({d});
    for (std::size_t r : keep)
        for (std::size_t c = 0; c < d; ++c) out[c] += tm.at(r, c);
    const Real inv = Real(1) / static_cast<Real>(keep.size());
    for (Real& v : out.data()) v *= inv;
    const int mid = m.id;
    return push(std::move(out), "mean_rows", [mid, keep, d, inv](Tape& t, const Tensor& g) {
        Tensor& dm = t.grad_of(mid);
        for (std::size_t r : keep)
            for (std::size_t c = 0; c < d; ++c) dm.at(r, c) += inv * g[c];
    });
}

Var Tape::max_rows(Var m, const std::vector<std::size_t>& keep) {
    const Tensor& tm = value_of(m.id);
    require_rank(tm, 2, "max_rows");
    if (keep.empty()) throw DimensionError("max_rows: no rows selected");
    const std::size_t d = tm.cols();
    Tensor out({d});
    std::vector<std::size_t> argmax(d, keep[0]);
    for (std::size_t c = 0; c < d; ++c) out[c] = tm.at(keep[0], c);
    for (std::size_t ki = 1; ki < keep.size(); ++ki) {
        const std::size_t r = keep[ki];
        for (std::size_t c = 0; c < d; ++c) {
            if (tm.at(r, c) > out[c]) {
                out[c] = tm.at(r, c);
                argmax[c] = r;
            }
        }
    }
    const int mid = m.id;
    return push(std::move(out), "max_rows", [mid, argmax, d](Tape& t, const Tensor& g) {
        Tensor& dm = t.grad_of(mid);
        for (std::size_t c = 0; c < d; ++c) dm.at(argmax[c], c) += g[c];
    });
}

Var Tape::weighted_sum_rows(Var m, Var w) {
    const Tensor& tm = value_of(m.id);
    const Tensor& tw = value_of(w.id);
    require_rank(tm, 2, "weighted_sum_rows");
    require_rank(tw, 1, "weighted_sum_rows");
    if (tm.rows() != tw.dim(0)) {
        throw DimensionError("weighted_sum_rows: shape mismatch " + tm.shape_str() + " vs " +
                             tw.shape_str());
    }
    const std::size_t n = tm.rows(), d = tm.cols();
    Tensor out({d});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) out[c] += tw[r] * tm.at(r, c);
    const int mid = m.id, wid = w.id;
    return push(std::move(out), "weighted_sum_rows", [mid, wid, n, d](Tape& t, const Tensor& g) {
        const Tensor& mv = t.value_of(mid);
        const Tensor& wv = t.value_of(wid);
        Tensor& dm = t.grad_of(mid);
        Tensor& dw = t.grad_of(wid);
        for (std::size_t r = 0; r < n; ++r) {
            Real acc = 0;
            for (std::size_t c = 0; c < d; ++c) {
                dm.at(r, c) += wv[r] * g[c];
                acc += mv.at(r, c) * g[c];
            }
            dw[r] += acc;
        }
    });
}

Var Tape::pick(Var x, std::size_t i) {
    const Tensor& tx = value_of(x.id);
    require_rank(tx, 1, "pick");
    if (i >= tx.size()) {
        throw DimensionError("pick: index " + std::to_string(i) + " out of range for " + tx.shape_str());
    }
    const int xid = x.id;
    return push(Tensor::scalar(tx[i]), "pick", [xid, i](Tape& t, const Tensor& g) {
        t.grad_of(xid)[i] += g[0];
    });
}

Var Tape::sum(Var x) {
    const Tensor& tx = value_of(x.id);
    Real acc = 0;
    for (Real v : tx.data()) acc += v;
    const int xid = x.id;
    return push(Tensor::scalar(acc), "sum", [xid](Tape& t, const Tensor& g) {
        Tensor& dx = t.grad_of(xid);
        for (Real& v : dx.data()) v += g[0];
    });
}

Var Tape::embed_rows(Var table, const std::vector<int>& ids) {
    const Tensor& tt = value_of(table.id);
    require_rank(tt, 2, "embed_rows");
    if (ids.empty()) throw DimensionError("embed_rows: empty id list");
    const std::size_t v = tt.rows(), d = tt.cols();
    std::vector<Real> data;
    data.reserve(ids.size() * d);
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= v) {
            throw DimensionError("embed_rows: id " + std::to_string(id) + " out of range for table " +
                                 tt.shape_str());
        }
        const std::size_t base = static_cast<std::size_t>(id) * d;
        data.insert(data.end(), tt.data().begin() + static_cast<std::ptrdiff_t>(base),
                    tt.data().begin() + static_cast<std::ptrdiff_t>(base + d));
    }
    const int tid = table.id;
    return push(Tensor({ids.size(), d}, std::move(data)), "embed_rows",
                [tid, ids, d](Tape& t, const Tensor& g) {
                    Tensor& dt = t.grad_of(tid);
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                        const std::size_t base = static_cast<std::size_t>(ids[k]) * d;
                        for (std::size_t c = 0; c < d; ++c) dt[base + c] += g[k * d + c];
                    }
                });
}

Var Tape::dropout(Var x, Real p, Rng& rng) {
    if (p < Real(0) || p >= Real(1)) {
        throw ConfigError("dropout: probability must lie in [0,1), got " +
                          std::to_string(static_cast<double>(p)));
    }
    const Tensor& tx = value_of(x.id);
    const Real keep_scale = Real(1) / (Real(1) - p);
    std::vector<Real> mask(tx.size());
    for (Real& mv : mask) mv = (rng.uniform() < static_cast<double>(p)) ? Real(0) : keep_scale;
    Tensor out = tx;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    const int xid = x.id;
    return push(std::move(out), "dropout", [xid, mask = std::move(mask)](Tape& t, const Tensor& g) {
        Tensor& dx = t.grad_of(xid);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * mask[i];
    });
}

void Tape::backward(Var root) {
    if (backward_done_) {
        throw NumericError("backward: already called on this tape");
    }
    if (root.tape != this || root.id < 0 || static_cast<std::size_t>(root.id) >= nodes_.size()) {
        throw DimensionError("backward: root does not belong to this tape");
    }
    const Tensor& rv = value_of(root.id);
    if (rv.size() != 1) {
        throw DimensionError("backward: root must be scalar, got " + rv.shape_str());
    }
    backward_done_ = true;
    grad_of(root.id)[0] = Real(1);
    // creation order is topological, so one reverse sweep visits each node once
    for (int i = root.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.empty()) continue;  // not reachable from the root
        ensure_finite(n.grad, n.op, "backward");
        if (n.backward_fn) n.backward_fn(*this, n.grad);
        if (n.parameter != nullptr) {
            Tensor& pg = n.parameter->grad;
            for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
        }
    }
}

}  // namespace lyricnet
