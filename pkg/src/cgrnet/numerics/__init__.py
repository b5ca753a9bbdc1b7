from .gradcheck import grad_check, relative_error
from .params import AdamState, ParamStore, adam_step, glorot_uniform, load_checkpoint, save_checkpoint
from .recurrent import LSTMWeights, bilstm, check_bidirectional_width, lstm, lstm_step
from .tensor import (
    ShapeError,
    Tape,
    Tensor,
    add,
    backward,
    concat,
    cross_entropy_rows,
    dropout,
    getitem,
    hinge,
    index_add,
    log,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    sigmoid,
    softmax,
    split_last,
    stack,
    sub,
    sum_,
    swapaxes,
    tanh,
    total,
)
