#pragma once

#include <cstdint>

// Raw compute kernels behind the network layers. Layouts are row-major:
// activations [n, h, w, c], conv weights [kh, kw, cin, cout], dense weights
// [in, out]. Two implementations share one contract: `par` carries the OpenMP
// pragmas and is what the model runs on; `serial` is the plain-loop reference
// the tests compare against.
//
// Both sides accumulate every output element in the same fixed order (kernel
// window, then channel; batch-major for parameter gradients), and the
// parallel split assigns each output element to exactly one thread. Results
// are therefore bit-identical between the two namespaces and across thread
// counts.
//
// Parameter-gradient kernels accumulate (+=) into dw/db; the caller owns
// zeroing. maxpool2 is 2x2, stride 2, truncating odd edges; `argmax` stores
// the winning offset (0..3, row-major within the window, first maximum wins).

namespace migdir::kernels {

#define MIGDIR_KERNEL_DECLS                                                    \
  void conv2d_forward(const double* in, const double* w, const double* b,     \
                      double* out, int n, int h, int wd, int cin, int kh,     \
                      int kw, int cout);                                       \
  void conv2d_backward_input(const double* dout, const double* w, double* din,\
                             int n, int h, int wd, int cin, int kh, int kw,   \
                             int cout);                                        \
  void conv2d_backward_params(const double* in, const double* dout,           \
                              double* dw, double* db, int n, int h, int wd,   \
                              int cin, int kh, int kw, int cout);              \
  void maxpool2_forward(const double* in, double* out, std::uint8_t* argmax,  \
                        int n, int h, int wd, int c);                          \
  void maxpool2_backward(const double* dout, const std::uint8_t* argmax,      \
                         double* din, int n, int h, int wd, int c);            \
  void dense_forward(const double* in, const double* w, const double* b,      \
                     double* out, int n, int in_dim, int out_dim);             \
  void dense_backward_input(const double* dout, const double* w, double* din, \
                            int n, int in_dim, int out_dim);                   \
  void dense_backward_params(const double* in, const double* dout, double* dw,\
                             double* db, int n, int in_dim, int out_dim);      \
  void relu_forward(const double* in, double* out, std::int64_t count);        \
  void relu_backward(const double* preact, const double* dout, double* din,   \
                     std::int64_t count);

namespace par {
MIGDIR_KERNEL_DECLS
}

namespace serial {
MIGDIR_KERNEL_DECLS
}

#undef MIGDIR_KERNEL_DECLS

}  // namespace migdir::kernels
