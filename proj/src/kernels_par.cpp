#include "migdir/kernels.hpp"

// OpenMP twins of the serial kernels. Every output element is produced by
// exactly one thread, and its reduction runs in the same order as the serial
// loops, so outputs match the reference bit for bit at any thread count. The
// parameter-gradient kernels reduce batch-major per element, matching the
// serial batch-outer accumulation.

namespace migdir::kernels::par {

namespace {

inline std::int64_t idx4(int b, int y, int x, int c, int h, int w, int ch) {
  return ((static_cast<std::int64_t>(b) * h + y) * w + x) * ch + c;
}

inline std::int64_t widx(int ky, int kx, int ci, int co, int kw, int cin,
                         int cout) {
  return ((static_cast<std::int64_t>(ky) * kw + kx) * cin + ci) * cout + co;
}

}  // namespace

void conv2d_forward(const double* in, const double* w, const double* b,
                    double* out, int n, int h, int wd, int cin, int kh, int kw,
                    int cout) {
  const int ho = h - kh + 1;
  const int wo = wd - kw + 1;
#pragma omp parallel for collapse(2) schedule(static)
  for (int bn = 0; bn < n; ++bn) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        for (int co = 0; co < cout; ++co) {
          double acc = b[co];
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              for (int ci = 0; ci < cin; ++ci) {
                acc += in[idx4(bn, oy + ky, ox + kx, ci, h, wd, cin)] *
                       w[widx(ky, kx, ci, co, kw, cin, cout)];
              }
            }
          }
          out[idx4(bn, oy, ox, co, ho, wo, cout)] = acc;
        }
      }
    }
  }
}

void conv2d_backward_input(const double* dout, const double* w, double* din,
                           int n, int h, int wd, int cin, int kh, int kw,
                           int cout) {
  const int ho = h - kh + 1;
  const int wo = wd - kw + 1;
#pragma omp parallel for collapse(2) schedule(static)
  for (int bn = 0; bn < n; ++bn) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < wd; ++ix) {
        const int ky_lo = iy - (ho - 1) > 0 ? iy - (ho - 1) : 0;
        const int ky_hi = iy < kh - 1 ? iy : kh - 1;
        const int kx_lo = ix - (wo - 1) > 0 ? ix - (wo - 1) : 0;
        const int kx_hi = ix < kw - 1 ? ix : kw - 1;
        for (int ci = 0; ci < cin; ++ci) {
          double acc = 0.0;
          for (int ky = ky_lo; ky <= ky_hi; ++ky) {
            for (int kx = kx_lo; kx <= kx_hi; ++kx) {
              for (int co = 0; co < cout; ++co) {
                acc += dout[idx4(bn, iy - ky, ix - kx, co, ho, wo, cout)] *
                       w[widx(ky, kx, ci, co, kw, cin, cout)];
              }
            }
          }
          din[idx4(bn, iy, ix, ci, h, wd, cin)] = acc;
        }
      }
    }
  }
}

void conv2d_backward_params(const double* in, const double* dout, double* dw,
                            double* db, int n, int h, int wd, int cin, int kh,
                            int kw, int cout) {
  const int ho = h - kh + 1;
  const int wo = wd - kw + 1;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ky = 0; ky < kh; ++ky) {
    for (int kx = 0; kx < kw; ++kx) {
      for (int ci = 0; ci < cin; ++ci) {
        for (int co = 0; co < cout; ++co) {
          double acc = 0.0;
          for (int bn = 0; bn < n; ++bn) {
            for (int oy = 0; oy < ho; ++oy) {
              for (int ox = 0; ox < wo; ++ox) {
                acc += in[idx4(bn, oy + ky, ox + kx, ci, h, wd, cin)] *
                       dout[idx4(bn, oy, ox, co, ho, wo, cout)];
              }
            }
          }
          dw[widx(ky, kx, ci, co, kw, cin, cout)] += acc;
        }
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (int co = 0; co < cout; ++co) {
    double acc = 0.0;
    for (int bn = 0; bn < n; ++bn) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          acc += dout[idx4(bn, oy, ox, co, ho, wo, cout)];
        }
      }
    }
    db[co] += acc;
  }
}

void maxpool2_forward(const double* in, double* out, std::uint8_t* argmax,
                      int n, int h, int wd, int c) {
  const int ho = h / 2;
  const int wo = wd / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int bn = 0; bn < n; ++bn) {
    for (int py = 0; py < ho; ++py) {
      for (int px = 0; px < wo; ++px) {
        for (int ch = 0; ch < c; ++ch) {
          double best = in[idx4(bn, 2 * py, 2 * px, ch, h, wd, c)];
          std::uint8_t where = 0;
          for (std::uint8_t k = 1; k < 4; ++k) {
            const double v =
                in[idx4(bn, 2 * py + k / 2, 2 * px + k % 2, ch, h, wd, c)];
            if (v > best) {
              best = v;
              where = k;
            }
          }
          const std::int64_t o = idx4(bn, py, px, ch, ho, wo, c);
          out[o] = best;
          argmax[o] = where;
        }
      }
    }
  }
}

void maxpool2_backward(const double* dout, const std::uint8_t* argmax,
                       double* din, int n, int h, int wd, int c) {
  const int ho = h / 2;
  const int wo = wd / 2;
  const std::int64_t count = static_cast<std::int64_t>(n) * h * wd * c;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    din[i] = 0.0;
  }
  // Pool windows are disjoint, so the scatter below has one writer per
  // input element.
#pragma omp parallel for collapse(2) schedule(static)
  for (int bn = 0; bn < n; ++bn) {
    for (int py = 0; py < ho; ++py) {
      for (int px = 0; px < wo; ++px) {
        for (int ch = 0; ch < c; ++ch) {
          const std::int64_t o = idx4(bn, py, px, ch, ho, wo, c);
          const std::uint8_t k = argmax[o];
          din[idx4(bn, 2 * py + k / 2, 2 * px + k % 2, ch, h, wd, c)] =
              dout[o];
        }
      }
    }
  }
}

void dense_forward(const double* in, const double* w, const double* b,
                   double* out, int n, int in_dim, int out_dim) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int bn = 0; bn < n; ++bn) {
    for (int o = 0; o < out_dim; ++o) {
      double acc = b[o];
      for (int i = 0; i < in_dim; ++i) {
        acc += in[static_cast<std::int64_t>(bn) * in_dim + i] *
               w[static_cast<std::int64_t>(i) * out_dim + o];
      }
      out[static_cast<std::int64_t>(bn) * out_dim + o] = acc;
    }
  }
}

void dense_backward_input(const double* dout, const double* w, double* din,
                          int n, int in_dim, int out_dim) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int bn = 0; bn < n; ++bn) {
    for (int i = 0; i < in_dim; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out_dim; ++o) {
        acc += dout[static_cast<std::int64_t>(bn) * out_dim + o] *
               w[static_cast<std::int64_t>(i) * out_dim + o];
      }
      din[static_cast<std::int64_t>(bn) * in_dim + i] = acc;
    }
  }
}

void dense_backward_params(const double* in, const double* dout, double* dw,
                           double* db, int n, int in_dim, int out_dim) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < in_dim; ++i) {
    for (int o = 0; o < out_dim; ++o) {
      double acc = 0.0;
      for (int bn = 0; bn < n; ++bn) {
        acc += in[static_cast<std::int64_t>(bn) * in_dim + i] *
               dout[static_cast<std::int64_t>(bn) * out_dim + o];
      }
      dw[static_cast<std::int64_t>(i) * out_dim + o] += acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out_dim; ++o) {
    double acc = 0.0;
    for (int bn = 0; bn < n; ++bn) {
      acc += dout[static_cast<std::int64_t>(bn) * out_dim + o];
    }
    db[o] += acc;
  }
}

void relu_forward(const double* in, double* out, std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    out[i] = in[i] > 0.0 ? in[i] : 0.0;
  }
}

void relu_backward(const double* preact, const double* dout, double* din,
                   std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    din[i] = preact[i] > 0.0 ? dout[i] : 0.0;
  }
}

}  // namespace migdir::kernels::par
