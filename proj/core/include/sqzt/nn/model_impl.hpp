#pragma once

// template implementations for model.hpp; include that header instead

namespace sqzt::nn {

namespace detail {

template <typename T>
Eigen::Map<const Mat<T>> weight_map(const Model<T>& m, std::ptrdiff_t off, int rows, int cols) {
  return {m.params.data() + off, rows, cols};
}

template <typename T>
Eigen::Map<const Vec<T>> bias_map(const Model<T>& m, std::ptrdiff_t off, int n) {
  return {m.params.data() + off, n};
}

// gather: cols(kk*cin + c, t) = x(c, t*stride + kk - pad_left), zero outside
template <typename T>
void im2col(const ConvPlan& p, const Mat<T>& x, Mat<T>& cols) {
  cols.resize(p.kernel * p.cin, p.len_out);
  for (int t = 0; t < p.len_out; ++t) {
    const int base = t * p.stride - p.pad_left;
    for (int kk = 0; kk < p.kernel; ++kk) {
      const int src = base + kk;
      if (src >= 0 && src < p.len_in)
        cols.col(t).segment(kk * p.cin, p.cin) = x.col(src);
      else
        cols.col(t).segment(kk * p.cin, p.cin).setZero();
    }
  }
}

template <typename T>
const Mat<T>& conv_forward(const Model<T>& model, const ConvPlan& p, const Mat<T>& x,
                           Workspace<T>& ws) {
  im2col(p, x, ws.cols[p.id]);
  Mat<T>& out = ws.conv_out[p.id];
  out.resize(p.cout, p.len_out);
  out.noalias() = weight_map(model, p.w_off, p.cout, p.kernel * p.cin) * ws.cols[p.id];
  out.colwise() += bias_map(model, p.b_off, p.cout);
  if (p.relu) out = out.cwiseMax(T(0));
  return out;
}

// returns d(loss)/d(conv input); accumulates weight/bias grads
template <typename T>
Mat<T> conv_backward(const Model<T>& model, const ConvPlan& p, Mat<T>& dout,
                     Workspace<T>& ws, Vec<T>& grad) {
  if (p.relu) {
    const Mat<T>& out = ws.conv_out[p.id];
    dout.array() *= (out.array() > T(0)).template cast<T>();
  }
  Eigen::Map<Mat<T>> dw(grad.data() + p.w_off, p.cout, p.kernel * p.cin);
  Eigen::Map<Vec<T>> db(grad.data() + p.b_off, p.cout);
  dw.noalias() += dout * ws.cols[p.id].transpose();
  db.noalias() += dout.rowwise().sum();

  Mat<T>& dcols = ws.dcols[p.id];
  dcols.resize(p.kernel * p.cin, p.len_out);
  dcols.noalias() = weight_map(model, p.w_off, p.cout, p.kernel * p.cin).transpose() * dout;

  Mat<T> dx = Mat<T>::Zero(p.cin, p.len_in);
  for (int t = 0; t < p.len_out; ++t) {
    const int base = t * p.stride - p.pad_left;
    for (int kk = 0; kk < p.kernel; ++kk) {
      const int src = base + kk;
      if (src >= 0 && src < p.len_in)
        dx.col(src) += dcols.col(t).segment(kk * p.cin, p.cin);
    }
  }
  return dx;
}

}  // namespace detail

template <typename T>
Vec<T> forward(const Model<T>& model, const Mat<T>& input, Workspace<T>& ws) {
  const ModelPlan& plan = model.plan;
  ws.cols.resize(plan.n_convs);
  ws.conv_out.resize(plan.n_convs);
  ws.dcols.resize(plan.n_convs);
  ws.dense_in.resize(plan.n_dense);
  ws.dense_out.resize(plan.n_dense);

  Mat<T> x = detail::conv_forward(model, plan.stem, input, ws);
  for (const auto& stage : plan.stages) {
    for (const auto& block : stage.blocks) {
      const Mat<T>& h = detail::conv_forward(model, block.c1, x, ws);
      const Mat<T>& y = detail::conv_forward(model, block.c2, h, ws);
      Mat<T> cat(x.rows() + y.rows(), x.cols());
      cat.topRows(x.rows()) = x;
      cat.bottomRows(y.rows()) = y;
      x = std::move(cat);
    }
    x = detail::conv_forward(model, stage.transition, x, ws);
  }
  for (const auto& t : plan.tail) x = detail::conv_forward(model, t, x, ws);

  Vec<T> v = Eigen::Map<const Vec<T>>(x.data(), x.size());
  for (const auto& d : plan.head) {
    ws.dense_in[d.id] = v;
    Vec<T> y = detail::weight_map(model, d.w_off, d.out, d.in) * v +
               detail::bias_map(model, d.b_off, d.out);
    if (d.relu) y = y.cwiseMax(T(0));
    ws.dense_out[d.id] = y;
    v = std::move(y);
  }
  return v;
}

template <typename T>
void backward(const Model<T>& model, const Vec<T>& dout_head, Workspace<T>& ws,
              Vec<T>& grad) {
  const ModelPlan& plan = model.plan;
  Vec<T> dv = dout_head;
  for (auto it = plan.head.rbegin(); it != plan.head.rend(); ++it) {
    const DensePlan& d = *it;
    if (d.relu)
      dv.array() *= (ws.dense_out[d.id].array() > T(0)).template cast<T>();
    Eigen::Map<Mat<T>> dw(grad.data() + d.w_off, d.out, d.in);
    Eigen::Map<Vec<T>> db(grad.data() + d.b_off, d.out);
    dw.noalias() += dv * ws.dense_in[d.id].transpose();
    db.noalias() += dv;
    dv = (detail::weight_map(model, d.w_off, d.out, d.in).transpose() * dv).eval();
  }

  // reshape flat gradient back to the last trunk feature map
  const ConvPlan* last =
      !plan.tail.empty() ? &plan.tail.back()
                         : (!plan.stages.empty() ? &plan.stages.back().transition : &plan.stem);
  Mat<T> dx = Eigen::Map<const Mat<T>>(dv.data(), last->cout, last->len_out);

  for (auto it = plan.tail.rbegin(); it != plan.tail.rend(); ++it)
    dx = detail::conv_backward(model, *it, dx, ws, grad);

  for (auto st = plan.stages.rbegin(); st != plan.stages.rend(); ++st) {
    dx = detail::conv_backward(model, st->transition, dx, ws, grad);
    for (auto bl = st->blocks.rbegin(); bl != st->blocks.rend(); ++bl) {
      // dx splits over the concat [block input ; conv pair output]
      Mat<T> dy = dx.bottomRows(bl->c2.cout);
      Mat<T> dx_top = dx.topRows(bl->c1.cin);
      Mat<T> dh = detail::conv_backward(model, bl->c2, dy, ws, grad);
      dx = detail::conv_backward(model, bl->c1, dh, ws, grad);
      dx += dx_top;
    }
  }
  dx = detail::conv_backward(model, plan.stem, dx, ws, grad);
}

}  // namespace sqzt::nn
