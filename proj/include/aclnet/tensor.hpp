#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "aclnet/errors.hpp"

namespace aclnet {

// Dense row-major shape. Last axis is fastest, which keeps the time axis
// innermost for the 1-D front-end convolutions.
struct Shape {
    std::vector<int64_t> dims;

    Shape() = default;
    Shape(std::initializer_list<int64_t> d) : dims(d) {}
    explicit Shape(std::vector<int64_t> d) : dims(std::move(d)) {}

    int rank() const { return static_cast<int>(dims.size()); }
    int64_t operator[](int i) const { return dims[static_cast<size_t>(i)]; }

    // Element count, checked against int64 overflow.
    int64_t count() const {
        __int128 n = 1;
        for (int64_t d : dims) {
            if (d < 1) throw shape_error("shape dimension must be >= 1, got " + std::to_string(d));
            n *= d;
            if (n > std::numeric_limits<int64_t>::max())
                throw shape_error("shape element count overflows index range: " + str());
        }
        return static_cast<int64_t>(n);
    }

    bool operator==(const Shape& o) const { return dims == o.dims; }
    bool operator!=(const Shape& o) const { return dims != o.dims; }

    std::string str() const {
        std::ostringstream os;
        os << "(";
        for (size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
        os << ")";
        return os.str();
    }
};

// Dense tensor. Precision is a template parameter: float is the default
// everywhere, double is used by the gradient-check paths, which need the
// extra arithmetic headroom for finite differences.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != shape.count())
            throw shape_error("tensor data length " + std::to_string(data.size()) +
                              " does not match shape " + shape.str());
    }

    static Tensor zeros(const Shape& s) {
        Tensor t;
        t.shape = s;
        t.data.assign(static_cast<size_t>(s.count()), T(0));
        return t;
    }

    static Tensor full(const Shape& s, T value) {
        Tensor t = zeros(s);
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    int64_t count() const { return static_cast<int64_t>(data.size()); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    // Rank-4 (N,C,H,W) accessors used by the layer kernels.
    T& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
        return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    T at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
Tensor<T> zeros(const Shape& s) {
    return Tensor<T>::zeros(s);
}

// (C,1,T) viewed as (1,C,T). Row-major layout is identical for both, so this
// is a pure relabeling; the data is not touched.
template <typename T>
Tensor<T> transpose_cw(const Tensor<T>& t) {
    if (t.shape.rank() != 3)
        throw shape_error("transpose_cw expects a rank-3 tensor, got " + t.shape.str());
    if (t.shape[1] != 1)
        throw shape_error("transpose_cw expects (C,1,T), got " + t.shape.str());
    return Tensor<T>(Shape{1, t.shape[0], t.shape[2]}, t.data);
}

// Inverse view: (1,C,T) back to (C,1,T), bit-exact.
template <typename T>
Tensor<T> transpose_cw_inverse(const Tensor<T>& t) {
    if (t.shape.rank() != 3)
        throw shape_error("transpose_cw_inverse expects a rank-3 tensor, got " + t.shape.str());
    if (t.shape[0] != 1)
        throw shape_error("transpose_cw_inverse expects (1,C,T), got " + t.shape.str());
    return Tensor<T>(Shape{t.shape[1], 1, t.shape[2]}, t.data);
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape != b.shape)
        throw shape_error("elementwise add: shape mismatch " + a.shape.str() + " vs " + b.shape.str());
    Tensor<T> out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape != b.shape)
        throw shape_error("elementwise mul: shape mismatch " + a.shape.str() + " vs " + b.shape.str());
    Tensor<T> out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    Tensor<T> out = a;
    for (T& v : out.data) v *= s;
    return out;
}

}  // namespace aclnet
