// leaf callee
module.exports = 7;
