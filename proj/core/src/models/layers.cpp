#include "kacq/models/layers.hpp"

#include <cmath>

#include "kacq/error.hpp"

namespace kacq::models {

Tensor forward_child(const Layer& layer, const Tensor& x, ForwardContext& ctx, CachePtr* cache) {
  if (ctx.observer) ctx.observer(layer, x);
  return layer.forward(x, ctx, cache);
}

namespace {

struct InputShapeCache final : LayerCache {
  Shape input_shape;
};

struct DenseCache final : LayerCache {
  Tensor input;
  Tensor output;
  Tensor pre;
};

std::size_t last_axis_rows(const Tensor& x, std::size_t width, const std::string& kind) {
  if (x.rank() < 2 || x.shape().back() != width) {
    throw ShapeError(kind + ": expected last axis " + std::to_string(width) + ", got " +
                     shape_string(x.shape()));
  }
  return x.size() / width;
}

}  // namespace

Dense::Dense(std::size_t in_dim, std::size_t out_dim, Activation act)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      act_(act),
      weight_("weight", Tensor({in_dim, out_dim})),
      bias_("bias", Tensor({out_dim})) {
  if (in_dim == 0 || out_dim == 0) throw ParameterError("dense: sizes must be positive");
}

void Dense::initialize(RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim_ + out_dim_));
  for (double& w : weight_.value.data()) w = rng.uniform(-limit, limit);
  bias_.value.fill(0.0);
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.empty() || input.back() != in_dim_) {
    throw ShapeError("dense: expected last axis " + std::to_string(in_dim_) + ", got " +
                     shape_string(input));
  }
  Shape out = input;
  out.back() = out_dim_;
  return out;
}

Tensor Dense::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  const std::size_t rows = last_axis_rows(x, in_dim_, kind());
  Shape out_shape = x.shape();
  out_shape.back() = out_dim_;
  Tensor pre(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(bias_.value.ptr(), bias_.value.ptr() + out_dim_, pre.ptr() + r * out_dim_);
  }
  gemm(rows, out_dim_, in_dim_, x.ptr(), weight_.value.ptr(), pre.ptr(), true);
  Tensor y = act_ == Activation::Identity ? pre : activation(pre, act_);
  if (cache != nullptr) {
    auto c = std::make_unique<DenseCache>();
    c->input = x;
    c->output = y;
    if (act_ != Activation::Identity) c->pre = std::move(pre);
    *cache = std::move(c);
  }
  return y;
}

Tensor Dense::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<DenseCache>(cache, kind());
  require_shape(dy, c.output.shape(), "dense backward");
  const std::size_t rows = c.input.size() / in_dim_;
  Tensor dpre = dy;
  if (act_ != Activation::Identity) {
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      dpre[i] *= activate_derivative(act_, c.pre[i], c.output[i]);
    }
  }
  gemm_at(in_dim_, out_dim_, rows, c.input.ptr(), dpre.ptr(), weight_.grad.ptr(), true);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out_dim_; ++o) bias_.grad[o] += dpre[r * out_dim_ + o];
  Tensor dx(c.input.shape());
  const double* w = weight_.value.ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = dpre.ptr() + r * out_dim_;
    double* out = dx.ptr() + r * in_dim_;
    for (std::size_t i = 0; i < in_dim_; ++i) {
      const double* wi = w + i * out_dim_;
      double s = 0.0;
      for (std::size_t o = 0; o < out_dim_; ++o) s += g[o] * wi[o];
      out[i] = s;
    }
  }
  return dx;
}

Dropout::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout: rate must be in [0, 1)");
}

namespace {

struct DropoutCache final : LayerCache {
  Tensor mask;
};

}  // namespace

Tensor Dropout::forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const {
  if (ctx.mode == Mode::Infer || rate_ == 0.0) {
    if (cache != nullptr) {
      auto c = std::make_unique<DropoutCache>();
      c->mask = Tensor(x.shape(), 1.0);
      *cache = std::move(c);
    }
    return x;
  }
  if (ctx.rng == nullptr) throw Error("dropout: train mode requires a random stream");
  const double keep = 1.0 - rate_;
  Tensor mask(x.shape());
  for (double& m : mask.data()) m = ctx.rng->uniform01() < keep ? 1.0 / keep : 0.0;
  Tensor y = hadamard(x, mask);
  if (cache != nullptr) {
    auto c = std::make_unique<DropoutCache>();
    c->mask = std::move(mask);
    *cache = std::move(c);
  }
  return y;
}

Tensor Dropout::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<DropoutCache>(cache, kind());
  require_shape(dy, c.mask.shape(), "dropout backward");
  return hadamard(dy, c.mask);
}

Tensor Flatten::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  if (x.rank() < 1) throw ShapeError("flatten: expected a batch axis");
  if (cache != nullptr) {
    auto c = std::make_unique<InputShapeCache>();
    c->input_shape = x.shape();
    *cache = std::move(c);
  }
  const std::size_t batch = x.dim(0);
  return x.reshaped({batch, batch == 0 ? 0 : x.size() / batch});
}

Tensor Flatten::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<InputShapeCache>(cache, kind());
  if (dy.size() != shape_size(c.input_shape)) throw ShapeError("flatten backward: size mismatch");
  return dy.reshaped(c.input_shape);
}

Shape Complement::output_shape(const Shape& input) const {
  if (input != Shape{1}) throw ShapeError("complement: expected [1], got " + shape_string(input));
  return {2};
}

Tensor Complement::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  if (x.rank() != 2 || x.dim(1) != 1) {
    throw ShapeError("complement: expected [batch x 1], got " + shape_string(x.shape()));
  }
  Tensor y({x.dim(0), 2});
  for (std::size_t b = 0; b < x.dim(0); ++b) {
    y.at(b, 0) = 1.0 - x[b];
    y.at(b, 1) = x[b];
  }
  if (cache != nullptr) {
    auto c = std::make_unique<InputShapeCache>();
    c->input_shape = x.shape();
    *cache = std::move(c);
  }
  return y;
}

Tensor Complement::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<InputShapeCache>(cache, kind());
  require_shape(dy, {c.input_shape[0], 2}, "complement backward");
  Tensor dx(c.input_shape);
  for (std::size_t b = 0; b < dx.size(); ++b) dx[b] = dy.at(b, 1) - dy.at(b, 0);
  return dx;
}

namespace {

struct MultiCache final : LayerCache {
  std::vector<CachePtr> caches;
  std::vector<Shape> shapes;
};

}  // namespace

Shape Sequential::output_shape(const Shape& input) const {
  Shape s = input;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

Tensor Sequential::forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const {
  std::unique_ptr<MultiCache> c;
  if (cache != nullptr) {
    c = std::make_unique<MultiCache>();
    c->caches.resize(layers_.size());
  }
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = forward_child(*layers_[i], h, ctx, c ? &c->caches[i] : nullptr);
  }
  if (cache != nullptr) *cache = std::move(c);
  return h;
}

Tensor Sequential::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<MultiCache>(cache, kind());
  Tensor g = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(c.caches[i].get(), g);
  return g;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

std::vector<Layer*> Sequential::children() {
  std::vector<Layer*> out;
  for (auto& l : layers_) out.push_back(l.get());
  return out;
}

SplitConcat::SplitConcat(std::vector<std::unique_ptr<Layer>> branches)
    : branches_(std::move(branches)) {
  if (branches_.empty()) throw ParameterError("split_concat: needs at least one branch");
}

Shape SplitConcat::output_shape(const Shape& input) const {
  const std::size_t k = branches_.size();
  if (input.size() != 1 || input[0] % k != 0) {
    throw ShapeError("split_concat: input " + shape_string(input) + " not divisible into " +
                     std::to_string(k) + " segments");
  }
  std::size_t total = 0;
  for (const auto& b : branches_) {
    const Shape o = b->output_shape({input[0] / k});
    if (o.size() != 1) throw ShapeError("split_concat: branches must produce vectors");
    total += o[0];
  }
  return {total};
}

Tensor SplitConcat::forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const {
  const std::size_t k = branches_.size();
  if (x.rank() != 2 || x.dim(1) % k != 0) {
    throw ShapeError("split_concat: expected [batch x " + std::to_string(k) + "*w], got " +
                     shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), w = x.dim(1) / k;
  std::unique_ptr<MultiCache> c;
  if (cache != nullptr) {
    c = std::make_unique<MultiCache>();
    c->caches.resize(k);
  }
  std::vector<Tensor> outs;
  std::size_t total = 0;
  for (std::size_t s = 0; s < k; ++s) {
    Tensor seg({batch, w});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < w; ++j) seg.at(b, j) = x.at(b, s * w + j);
    outs.push_back(forward_child(*branches_[s], seg, ctx, c ? &c->caches[s] : nullptr));
    if (c) c->shapes.push_back(outs.back().shape());
    total += outs.back().dim(1);
  }
  Tensor y({batch, total});
  std::size_t off = 0;
  for (const Tensor& o : outs) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < o.dim(1); ++j) y.at(b, off + j) = o.at(b, j);
    off += o.dim(1);
  }
  if (cache != nullptr) *cache = std::move(c);
  return y;
}

Tensor SplitConcat::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<MultiCache>(cache, kind());
  const std::size_t k = branches_.size(), batch = dy.dim(0);
  std::vector<Tensor> dxs;
  std::size_t off = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t d = c.shapes[s][1];
    Tensor g({batch, d});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < d; ++j) g.at(b, j) = dy.at(b, off + j);
    off += d;
    dxs.push_back(branches_[s]->backward(c.caches[s].get(), g));
  }
  const std::size_t w = dxs[0].dim(1);
  Tensor dx({batch, k * w});
  for (std::size_t s = 0; s < k; ++s)
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < w; ++j) dx.at(b, s * w + j) = dxs[s].at(b, j);
  return dx;
}

std::vector<Param*> SplitConcat::params() {
  std::vector<Param*> out;
  for (auto& l : branches_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

std::vector<Layer*> SplitConcat::children() {
  std::vector<Layer*> out;
  for (auto& l : branches_) out.push_back(l.get());
  return out;
}

DualChannel::DualChannel(std::unique_ptr<Layer> first, std::unique_ptr<Layer> second)
    : first_(std::move(first)), second_(std::move(second)) {}

Shape DualChannel::output_shape(const Shape& input) const {
  const Shape a = first_->output_shape(input), b = second_->output_shape(input);
  if (a.size() != 1 || b.size() != 1) throw ShapeError("dual_channel: channels must emit vectors");
  return {a[0] + b[0]};
}

Tensor DualChannel::forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const {
  std::unique_ptr<MultiCache> c;
  if (cache != nullptr) {
    c = std::make_unique<MultiCache>();
    c->caches.resize(2);
  }
  const Tensor a = forward_child(*first_, x, ctx, c ? &c->caches[0] : nullptr);
  const Tensor b = forward_child(*second_, x, ctx, c ? &c->caches[1] : nullptr);
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("dual_channel: channels must emit [batch x d]");
  const std::size_t batch = a.dim(0), da = a.dim(1), db = b.dim(1);
  Tensor y({batch, da + db});
  for (std::size_t r = 0; r < batch; ++r) {
    std::copy(a.ptr() + r * da, a.ptr() + (r + 1) * da, y.ptr() + r * (da + db));
    std::copy(b.ptr() + r * db, b.ptr() + (r + 1) * db, y.ptr() + r * (da + db) + da);
  }
  if (c) {
    c->shapes = {a.shape(), b.shape()};
    *cache = std::move(c);
  }
  return y;
}

Tensor DualChannel::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<MultiCache>(cache, kind());
  const std::size_t batch = dy.dim(0), da = c.shapes[0][1], db = c.shapes[1][1];
  require_shape(dy, {batch, da + db}, "dual_channel backward");
  Tensor ga({batch, da}), gb({batch, db});
  for (std::size_t r = 0; r < batch; ++r) {
    std::copy(dy.ptr() + r * (da + db), dy.ptr() + r * (da + db) + da, ga.ptr() + r * da);
    std::copy(dy.ptr() + r * (da + db) + da, dy.ptr() + (r + 1) * (da + db), gb.ptr() + r * db);
  }
  Tensor dx = first_->backward(c.caches[0].get(), ga);
  axpy(1.0, second_->backward(c.caches[1].get(), gb), dx);
  return dx;
}

std::vector<Param*> DualChannel::params() {
  auto out = first_->params();
  for (Param* p : second_->params()) out.push_back(p);
  return out;
}

std::vector<Layer*> flatten_layers(Layer& root) {
  std::vector<Layer*> out{&root};
  for (Layer* child : root.children()) {
    for (Layer* l : flatten_layers(*child)) out.push_back(l);
  }
  return out;
}

}  // namespace kacq::models
