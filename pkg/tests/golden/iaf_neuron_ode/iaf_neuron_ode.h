// iaf_neuron_ode.h: generated by nestmlc 0.1.0 from model iaf_neuron_ode. Do not edit.
//
// Besides the members declared below, generated code only uses these
// runtime shim identifiers, defined in iaf_neuron_odemodule.cpp:
//   nestml_RingBuffer, nestml_BadParameter, nestml_E, nestml_resolution, nestml_steps, nestml_time, nestml_send_spike, nestml_log_info, nestml_register_model, exp, log, pow, fmin, fmax
#ifndef NESTML_IAF_NEURON_ODE_H
#define NESTML_IAF_NEURON_ODE_H

#include <cmath>
#include <map>
#include <string>

#ifndef NESTML_SHIM_API
#define NESTML_SHIM_API
struct nestml_RingBuffer {
  void add_value(long lag, double value);
  double get_value(long lag);
  void clear();
  std::map<long, double> pending;
};
struct nestml_BadParameter {
  explicit nestml_BadParameter(const char* name);
};
extern const double nestml_E;
double nestml_resolution();
long nestml_steps(double duration_ms);
double nestml_time(long origin, long lag);
void nestml_send_spike(void* model, long lag);
void nestml_log_info(const std::string& message);
#endif

class iaf_neuron_ode {
 public:
  iaf_neuron_ode();
  void calibrate();
  void update(long origin, long from, long to);
  void handle(const std::string& port, long lag, double value);
  void init_buffers();

  // status dictionary access by variable name
  void get_status(std::map<std::string, double>& d) const;
  void set_status(const std::map<std::string, double>& d);
  static const char* const recordables[];
  static const long n_recordables;

  // parameters, state and internals
  double get_C_m() const { return P_.C_m; }
  void set_C_m(double value) {
    const double previous = P_.C_m;
    P_.C_m = value;
    if (!(P_.C_m > 0)) {
      P_.C_m = previous;
      throw nestml_BadParameter("C_m");
    }
    calibrate();
  }
  double get_Tau() const { return P_.Tau; }
  void set_Tau(double value) {
    const double previous = P_.Tau;
    P_.Tau = value;
    if (!(P_.Tau > 0)) {
      P_.Tau = previous;
      throw nestml_BadParameter("Tau");
    }
    calibrate();
  }
  double get_tau_in() const { return P_.tau_in; }
  void set_tau_in(double value) {
    const double previous = P_.tau_in;
    P_.tau_in = value;
    if (!(P_.tau_in > 0)) {
      P_.tau_in = previous;
      throw nestml_BadParameter("tau_in");
    }
    calibrate();
  }
  double get_w() const { return P_.w; }
  void set_w(double value) {
    P_.w = value;
    calibrate();
  }
  double get_I_e() const { return P_.I_e; }
  void set_I_e(double value) {
    P_.I_e = value;
    calibrate();
  }
  double get_Theta() const { return P_.Theta; }
  void set_Theta(double value) {
    P_.Theta = value;
    calibrate();
  }
  double get_V_reset() const { return P_.V_reset; }
  void set_V_reset(double value) {
    P_.V_reset = value;
    calibrate();
  }
  double get_t_ref() const { return P_.t_ref; }
  void set_t_ref(double value) {
    P_.t_ref = value;
    calibrate();
  }
  double get_V_m() const { return S_.V_m; }
  void set_V_m(double value) {
    const double previous = S_.V_m;
    S_.V_m = value;
    if (!(S_.V_m >= (-99.0))) {
      S_.V_m = previous;
      throw nestml_BadParameter("V_m");
    }
  }
  long get_r() const { return S_.r; }
  void set_r(long value) {
    S_.r = value;
  }
  double get_I_shape__d1() const { return S_.I_shape__d1; }
  void set_I_shape__d1(double value) {
    S_.I_shape__d1 = value;
  }
  double get_I_shape() const { return S_.I_shape; }
  void set_I_shape(double value) {
    S_.I_shape = value;
  }
  double get_h() const { return V_.h; }
  long get_ref_steps() const { return V_.ref_steps; }
  double get_P11() const { return V_.P11; }
  double get_P22() const { return V_.P22; }
  double get_P33() const { return V_.P33; }
  double get_P21() const { return V_.P21; }
  double get_P31() const { return V_.P31; }
  double get_P32() const { return V_.P32; }
  double get_P34() const { return V_.P34; }

 private:
  struct Parameters_ {
    double C_m;
    double Tau;
    double tau_in;
    double w;
    double I_e;
    double Theta;
    double V_reset;
    double t_ref;
  } P_;

  struct State_ {
    double V_m;
    long r;
    double I_shape__d1;
    double I_shape;
  } S_;

  struct Variables_ {
    double h;
    long ref_steps;
    double P11;
    double P22;
    double P33;
    double P21;
    double P31;
    double P32;
    double P34;
  } V_;

  struct Buffers_ {
    nestml_RingBuffer spikeBuffer;
    nestml_RingBuffer currentBuffer;
  } B_;
};

#endif  // NESTML_IAF_NEURON_ODE_H
